"""Hypothesis-driven LLM infilling for local surrogate explanations of text classifiers."""
