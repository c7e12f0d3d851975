# Choreography toolkit services
