# LAGO - graph-constrained few-shot cross-lingual embedding alignment toolkit
