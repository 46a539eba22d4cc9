# Catalog, LHV polytope, quantum engine, optimizer, serialization
