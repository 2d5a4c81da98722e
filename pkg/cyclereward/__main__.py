from cyclereward.main import run

run()
