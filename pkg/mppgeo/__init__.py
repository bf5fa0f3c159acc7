# mppgeo Package