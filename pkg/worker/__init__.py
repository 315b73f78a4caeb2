# PlaneLoc command-line worker
