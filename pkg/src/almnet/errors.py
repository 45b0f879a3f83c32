"""Exception types shared across the package."""


class AlmnetError(Exception):
    pass


class ConfigError(AlmnetError):
    """Invalid configuration value or unsupported option."""


class ShapeError(AlmnetError):
    """Operand dimensions inconsistent with the network layout."""


class NumericError(AlmnetError):
    """Non-finite values or a failed factorization."""


class LinesearchError(AlmnetError):
    """Backtracking exceeded the retry cap without satisfying the sufficient-decrease test."""


class OracleError(AlmnetError):
    """Dense reference solver refused or failed; signals a bug elsewhere."""
