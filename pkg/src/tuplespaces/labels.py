"""Normative metric label names shared by the search layer and the bench."""

WRITE_LOCAL = "write::local"
READ_LOCAL = "read::local"
WRITE_REMOTE = "write::remote"
READ_REMOTE = "read::remote"
SEARCH = "read::l-r"
TOTAL_RUNTIME = "Master::TotalRuntime"
NODE_VISITED = "nodeVisited"

ALL_LABELS = (
    WRITE_LOCAL,
    READ_LOCAL,
    WRITE_REMOTE,
    READ_REMOTE,
    SEARCH,
    TOTAL_RUNTIME,
    NODE_VISITED,
)
