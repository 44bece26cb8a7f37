// experiment drivers land with the CLI
