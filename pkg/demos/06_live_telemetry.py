# %% [markdown]
# # Watching a run live
#
# Frames are JSON messages sent over a local WebSocket. A client can join
# at any time and simply starts receiving frames from that point on.

# %%
import json
import threading

from websockets.sync.client import connect

from fleetsim.harness import ScenarioConfig, TelemetryServer, run_single

frames = []


def listen(port):
    with connect(f"ws://127.0.0.1:{port}") as ws:
        for text in ws:
            frames.append(json.loads(text))


with TelemetryServer(port=0) as server:
    reader = threading.Thread(target=listen, args=(server.port,), daemon=True)
    reader.start()
    server.wait_for_clients(1)
    run_single(ScenarioConfig.preset("small", duration=120.0), frame_sinks=[server.publish])
    server.drain()
reader.join(timeout=5)

last = frames[-1]
print(f"received {len(frames)} frames, last at t={last['simulation_time']}")
for node in last["nodes"]:
    print(f"  node {node['id']:2d} {node['role']:>14} at {[round(c, 1) for c in node['position']]}")
print("tracked:", last["tracked_variables"])
