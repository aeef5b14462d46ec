# Adaptive wave tests
