# mppgeo App Package