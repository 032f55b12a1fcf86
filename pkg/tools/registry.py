from tools.t1_tangents import TangentViews
from tools.t2_score import ScoreOdis
from tools.t3_degrade import DegradeErp
from tools.t4_upsample import UpsampleErp
from tools.t5_compare import ComparePreferences
from tools.t6_subjective import SubjectiveStudy
from tools.t7_synth import SynthesizeErp
from tools.t8_distort import DistortErp

TOOL_REGISTRY = {
    TangentViews.tool_id: TangentViews,
    ScoreOdis.tool_id: ScoreOdis,
    DegradeErp.tool_id: DegradeErp,
    UpsampleErp.tool_id: UpsampleErp,
    ComparePreferences.tool_id: ComparePreferences,
    SubjectiveStudy.tool_id: SubjectiveStudy,
    SynthesizeErp.tool_id: SynthesizeErp,
    DistortErp.tool_id: DistortErp,
}
