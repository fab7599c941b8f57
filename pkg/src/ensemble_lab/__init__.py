"""Weight-spectrum and minimum-distance analysis of repeat-multiple-accumulate code ensembles."""

__version__ = "0.1.0"
