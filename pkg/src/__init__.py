# GKI-ICD - knowledge-injected training for multi-label ICD coding
