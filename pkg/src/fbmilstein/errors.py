"""Exception types shared across the package.

Parameter errors cover invalid or unsupported arguments, domain errors cover
out-of-range queries on otherwise valid objects, and embedding errors signal
an internal failure of the spectral sampler that survived its fallback.
"""


class ParameterError(ValueError):
    """An argument is invalid, inconsistent or unsupported."""


class DomainError(ValueError):
    """A query lies outside the domain of the object it is applied to."""


class EmbeddingError(RuntimeError):
    """Circulant embedding produced an eigenvalue too negative to clamp."""
