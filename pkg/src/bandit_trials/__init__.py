"""Index policies for Bernoulli bandits and response-adaptive trial simulation."""

__version__ = "0.1.0"
