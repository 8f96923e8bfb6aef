"""Exception types raised across the package."""


class SwlabError(Exception):
    pass


class NoConvergence(SwlabError):
    pass


class DegenerateFiber(SwlabError):
    pass


class FixedPointOnImage(SwlabError):
    pass


class SingularSet(SwlabError):
    pass


class JetConstraintViolated(SwlabError):
    pass


class StepTooLarge(SwlabError):
    pass


class ConfigInvalid(SwlabError):
    pass


class IoError(SwlabError):
    pass


class ConstraintViolated(SwlabError):
    pass


class LatticeMismatch(SwlabError):
    pass
