"""Exception hierarchy.

Three broad families map onto the CLI exit codes: configuration problems
(exit 2), data problems (exit 3), and inference failures (exit 4).
"""


class MepfitError(Exception):
    """Base class for all package errors."""


class ConfigError(MepfitError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(MepfitError):
    """Invalid input data (CLI exit code 3)."""


class InferenceError(MepfitError):
    """Sampling or optimization failure (CLI exit code 4)."""


# -- curves ---------------------------------------------------------------

class InvalidParamsError(ConfigError):
    """A curve parameter is missing, non-positive, or not finite."""


class UnsupportedKindError(ConfigError):
    """Operation not defined for this curve kind (e.g. S50 of a non-saturating curve)."""


class OutOfRangeError(ConfigError):
    """Target response outside the open interval (offset, offset + saturation)."""


# -- observation ----------------------------------------------------------

class DomainError(ConfigError):
    """Argument outside the support of a density."""


# -- hierarchy ------------------------------------------------------------

class InconsistentSpecError(ConfigError):
    """Model specification incompatible with the dataset."""


class EmptyDataError(DataError):
    """Dataset has no observations."""


class LengthMismatchError(ConfigError):
    """Vector length does not match the parameter layout."""


class ConstraintViolationError(ConfigError):
    """Parameter values violate the layout's positivity/bound constraints."""


# -- inference ------------------------------------------------------------

class NonFiniteGradientError(InferenceError):
    """Log-density gradient not finite at the initial point."""


class AllDivergentError(InferenceError):
    """Every post-warmup transition diverged."""


class DegenerateDataError(DataError):
    """Data cannot identify the curve (e.g. all intensities identical)."""


class UnknownParameterError(ConfigError):
    """Requested parameter name not present in the posterior."""


class InsufficientDrawsError(ConfigError):
    """Too few draws or chains for the requested summary."""


# -- evaluate -------------------------------------------------------------

class NonFiniteLikelihoodError(InferenceError):
    """Pointwise log-likelihood evaluated to NaN or +inf."""


class MismatchedObservationsError(ConfigError):
    """Cross-validation results computed on different observation sets."""


class WrongModelModeError(ConfigError):
    """Decision procedure applied to a model of the wrong comparison mode."""


class UnknownGroupError(ConfigError):
    """Group label not present in the fitted model."""


class AllZeroDifferencesError(DataError):
    """Signed-rank test received only zero differences."""


# -- data -----------------------------------------------------------------

class MissingColumnError(DataError):
    """Required CSV column absent."""


class NonPositiveMepError(DataError):
    """MEP size must be strictly positive."""


class UnknownGroupAssignmentError(DataError):
    """A participant appears in more than one group."""


# -- simulate -------------------------------------------------------------

class InvalidHyperparametersError(ConfigError):
    """Population hyperparameters invalid (e.g. negative scale)."""


class GridMismatchError(ConfigError):
    """Repetition count does not divide the total pulse budget."""


class AllDrawsDiscardedError(InferenceError):
    """Every simulated draw was discarded by the validity rule."""


class AllDrawsOutOfRangeError(InferenceError):
    """No posterior draw admits the requested response size."""
