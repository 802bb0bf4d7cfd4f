# supernet/__init__.py

"""SuperNet ensembling lab: dense classifiers, partitioning, SuperNets, voting and snapshot harvesting."""

__version__ = "0.1.0"
