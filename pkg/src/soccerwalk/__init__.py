"""Planning suite for a kid-size soccer biped: footsteps, CoM preview, whole-body IK, kick strategy."""

__version__ = "0.1.0"
