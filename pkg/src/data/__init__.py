# Corpus and Report I/O Package