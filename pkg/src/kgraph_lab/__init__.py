"""kgraph-lab: desk-scale checks for finite higher-rank graph constructions."""

__version__ = "0.1.0"
