"""Link-level simulation of non-orthogonal AFDM."""
