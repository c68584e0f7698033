from sglamp.cli import main

main()
