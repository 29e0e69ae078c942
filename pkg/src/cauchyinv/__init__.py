"""Edge-preserving Bayesian inversion with Cauchy and alpha-stable difference priors."""

__version__ = "0.1.0"
