# gforge: finite models for guarded sentences
