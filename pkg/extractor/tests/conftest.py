import numpy as np
import pytest


@pytest.fixture(scope="session")
def sample_video(tmp_path_factory):
    """Small mp4 with a bright square moving across a dark background."""
    import cv2

    path = str(tmp_path_factory.mktemp("video") / "sample.mp4")
    width, height = 96, 72
    writer = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*"mp4v"), 12, (width, height))
    assert writer.isOpened()
    for i in range(12):
        frame = np.zeros((height, width, 3), dtype=np.uint8)
        if i not in (5, 6):  # two frames with no hand at all
            x = 8 + 5 * i
            frame[20:45, x:x + 20] = 230
        writer.write(frame)
    writer.release()
    return path


@pytest.fixture(scope="session")
def empty_video(tmp_path_factory):
    import cv2

    path = str(tmp_path_factory.mktemp("video") / "dark.mp4")
    writer = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*"mp4v"), 12, (64, 48))
    assert writer.isOpened()
    for _ in range(6):
        writer.write(np.zeros((48, 64, 3), dtype=np.uint8))
    writer.release()
    return path
