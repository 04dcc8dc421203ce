"""Exception hierarchy. Every error carries the name of the stage that raised it."""


class HmlrfError(Exception):
    module = "hmlrf"


class DatasetError(HmlrfError):
    module = "core_data"


class HierarchyError(HmlrfError):
    module = "hierarchy_builder"


class TagStatsError(HmlrfError):
    module = "tag_stats"


class ForestError(HmlrfError):
    module = "forest"


class GraphError(HmlrfError):
    module = "affinity_graph"


class SpectralError(HmlrfError):
    module = "spectral_clustering"


class CompletionError(HmlrfError):
    module = "completion"


class MetricsError(HmlrfError):
    module = "metrics"
