"""Pipeline configuration, task generation, evaluation and reporting."""
