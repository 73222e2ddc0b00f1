version_info = (0, 3, 0)
version = ".".join(map(str, version_info))
