class AdapDpflError(Exception):
    pass


class AccountantError(AdapDpflError):
    pass


class InvalidOrderError(AccountantError, ValueError):
    pass


class InvalidCostError(AccountantError, ValueError):
    pass


class RdpOverflowError(AccountantError, ArithmeticError):
    """The log-space moment is still outside the float range; the order is unusable for this cost."""


class NoUsableOrderError(AccountantError):
    pass


class ModelError(AdapDpflError):
    pass


class DimensionMismatchError(ModelError, ValueError):
    pass


class NonFiniteError(ModelError, ArithmeticError):
    pass


class EmptySliceError(ModelError, ValueError):
    pass


class ClipViolationError(AdapDpflError, ValueError):
    pass


class DatasetError(AdapDpflError):
    pass


class IdxFormatError(DatasetError, ValueError):
    pass


class PartitionError(DatasetError, ValueError):
    pass


class NoUploadsError(AdapDpflError):
    pass


class ConfigError(AdapDpflError, ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class InvalidAxisError(ConfigError):
    def __init__(self, axis: str, valid_keys: list[str]) -> None:
        super().__init__(axis, f"unknown sweep axis, valid keys are: {', '.join(valid_keys)}")
        self.valid_keys = valid_keys
