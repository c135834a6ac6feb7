from prudent_walk.cli_io import main

main()
