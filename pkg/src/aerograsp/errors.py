"""Exception hierarchy shared by all modules."""


class AeroGraspError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(AeroGraspError, ValueError):
    pass


class OutOfWorkspaceError(AeroGraspError, ValueError):
    """Target lies outside the reachable annulus of the arm."""


class JointLimitError(AeroGraspError, ValueError):
    """An IK solution exists but violates a joint limit."""

    def __init__(self, joint: int, value: float, limits: tuple[float, float]):
        self.joint = joint
        self.value = value
        self.limits = limits
        super().__init__(
            f"joint {joint} = {value:.6f} rad outside limits [{limits[0]:.6f}, {limits[1]:.6f}]"
        )


class NoDepthError(AeroGraspError):
    """No valid depth points inside the localization window."""


class UndefinedRecallError(AeroGraspError, ValueError):
    """AP requested with zero ground truths."""


class ConfigError(AeroGraspError, ValueError):
    pass
