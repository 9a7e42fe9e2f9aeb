"""needstack: batch detection and prioritization of resource needs in
microblog corpora.

Pipeline: ingest JSON-lines tweets, mine collocation phrases, train
skip-gram embeddings, rank noun terms nearest the need/supply seeds, and
extract who-needs-what triples from dependency parses, with an evaluation
harness for precision@k, P/R/F1 and Cohen's kappa.
"""

__version__ = "0.1.0"
