"""Domain modules: system model, STRIDE, intelligence, layers, prioritization, D3FEND."""
