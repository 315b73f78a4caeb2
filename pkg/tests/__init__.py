# PlaneLoc tests
