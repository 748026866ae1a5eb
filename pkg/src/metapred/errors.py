"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """A simulation/CLI configuration is malformed or inconsistent."""


class DataError(ValueError):
    """An input dataset (CSV or constructed) violates the data contract."""


class NumericFailure(RuntimeError):
    """A numerical routine failed to converge or produced an unusable value.

    ``last_value`` carries the final iterate when one exists.
    """

    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value


class DivergedPosteriorError(NumericFailure):
    """The posterior over the heterogeneity scale failed to normalize.

    Raised when the tail of prior x likelihood does not decay below the
    configured mass cut before the expansion cap; carries the prior name.
    """

    def __init__(self, prior_name, message=None):
        msg = message or (
            f"posterior for prior '{prior_name}' does not decay; "
            "it appears improper for this dataset"
        )
        super().__init__(msg)
        self.prior_name = prior_name


class DegenerateDispersionWarning(UserWarning):
    """All effects are identical, so a dispersion-based variance is zero."""
