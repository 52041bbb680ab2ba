"""Dementia detection from interview transcripts.

Pipeline: CHAT transcript parsing -> fixed-length token/POS/embedding
encoding plus a 7-slot targeted feature vector -> a CNN-(bi)LSTM-
attention classifier trained with class-weighted binary cross-entropy
on a small built-in autodiff engine -> the multi-seed evaluation
protocol with variant comparison and feature ablations.
"""

__version__ = "0.1.0"
