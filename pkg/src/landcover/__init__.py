"""Land-cover classification with patch probabilities, graph segmentation,
per-segment voting, and multi-scale fusion."""

__version__ = "0.1.0"
