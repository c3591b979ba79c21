"""semlift: an interpreter for a small object-oriented language whose
runtime state doubles as an RDF knowledge graph.

The package exposes the graph layer (rdf), a lightweight description-logic
reasoner (ontology), a SPARQL subset engine (sparql), a SHACL subset
validator (shacl), the language front end (syntax), the static checker
(typecheck), the state-to-graph lifting (lifting), the small-step
interpreter (interpreter) and the command line front end (cli).
"""

__version__ = "0.1.0"
