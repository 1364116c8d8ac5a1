"""Numerical substrate: jets, tensors, expressions and sampling."""
