"""Shared fixtures: a scratch tasks directory and a live worker process."""

import json
import queue
import subprocess
import sys
import threading

import pytest
import yaml

# A pure-Python task keeps per-request child processes light: no ML
# runtime import, so protocol tests run in milliseconds per request.
PURE_TASK_SOURCE = '''\
import random


class Model:
    """Weighted polynomial over each input element."""

    def __init__(self, coeffs=None):
        self.coeffs = list(coeffs) if coeffs else [random.random() for _ in range(4)]

    def __call__(self, xs):
        return [sum(c * x**i for i, c in enumerate(self.coeffs)) for x in xs]


def get_init_inputs():
    return []


def get_inputs():
    return [[random.uniform(-2.0, 2.0) for _ in range(64)]]
'''

IDENTICAL_CANDIDATE = PURE_TASK_SOURCE

WRONG_CANDIDATE = PURE_TASK_SOURCE.replace(
    "return [sum(c * x**i for i, c in enumerate(self.coeffs)) for x in xs]",
    "return [1.0 + sum(c * x**i for i, c in enumerate(self.coeffs)) for x in xs]",
)

SYNTAX_ERROR_CANDIDATE = "def broken(:\n    pass\n"

RAISING_CANDIDATE = '''\
class ModelNew:
    def __init__(self):
        pass

    def __call__(self, xs):
        raise RuntimeError("candidate exploded on purpose")
'''

HARD_EXIT_CANDIDATE = '''\
import os


class ModelNew:
    def __init__(self):
        pass

    def __call__(self, xs):
        os._exit(3)
'''

SLEEPING_CANDIDATE = '''\
import time


class ModelNew:
    def __init__(self):
        pass

    def __call__(self, xs):
        time.sleep(60.0)
        return list(xs)
'''

PRINTING_CANDIDATE = PURE_TASK_SOURCE.replace(
    "def __call__(self, xs):",
    'def __call__(self, xs):\n        print("{not json", end="")',
)

FAST_TIMING = {"warmup_runs": 1, "min_runs": 3, "min_total_ms": 1.0}


def make_task_dir(root, task_id="poly", source=PURE_TASK_SOURCE, manifest_extra=None):
    task_dir = root / task_id
    task_dir.mkdir(parents=True)
    manifest = {"task_id": task_id, "timing": dict(FAST_TIMING)}
    manifest.update(manifest_extra or {})
    (task_dir / "task.yaml").write_text(yaml.safe_dump(manifest))
    (task_dir / "model.py").write_text(source)
    return task_dir


@pytest.fixture
def tasks_root(tmp_path):
    root = tmp_path / "tasks"
    make_task_dir(root)
    return root


class WorkerProcess:
    """Drives one worker over its stdio protocol, like the search side does."""

    def __init__(self, tasks_root, extra_args=()):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "pike_worker", "--tasks", str(tasks_root), *extra_args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump, daemon=True).start()
        self._next_id = 0

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def read_message(self, timeout=30.0):
        line = self._lines.get(timeout=timeout)
        if line is None:
            raise AssertionError("worker closed its stdout")
        return json.loads(line)

    def send(self, document):
        self.proc.stdin.write(json.dumps(document) + "\n")
        self.proc.stdin.flush()

    def send_raw(self, text):
        self.proc.stdin.write(text)
        self.proc.stdin.flush()

    def evaluate(self, code, task_id="poly", timeout_s=30.0, wait=60.0):
        self._next_id += 1
        req_id = f"req-{self._next_id}"
        self.send(
            {
                "id": req_id,
                "type": "evaluate",
                "task_id": task_id,
                "code": code,
                "timeout_s": timeout_s,
            }
        )
        response = self.read_message(timeout=wait)
        assert response["id"] == req_id
        return response

    def alive(self):
        return self.proc.poll() is None

    def close(self):
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


@pytest.fixture
def worker(tasks_root):
    w = WorkerProcess(tasks_root)
    ready = w.read_message(timeout=30.0)
    assert ready == {"type": "ready", "protocol_version": 1}
    yield w
    w.close()
