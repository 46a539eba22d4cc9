# Inequalities, quantum states, reports and errors
