# Experiment Orchestration Package