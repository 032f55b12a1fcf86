"""Tangent-view quality assessment engine for omnidirectional images."""
