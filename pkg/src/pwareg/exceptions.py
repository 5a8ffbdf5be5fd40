"""Exception types raised by pwareg."""


class PWAError(Exception):
    """Base class for all pwareg errors."""


class DegenerateSubset(PWAError):
    """The given points are affinely dependent; no unique hyperplane passes through them."""


class InstanceTooSmall(PWAError):
    pass


class InstanceTooLarge(PWAError):
    pass


class AllSubsetsDegenerate(PWAError):
    pass


class NoRealizableLabeling(PWAError):
    pass


class NotAPartition(PWAError):
    pass


class SequenceTooShort(PWAError):
    pass
