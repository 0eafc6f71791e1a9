"""Drive the HTTP session service end to end from a client.

Starts the service in-process on a free port, opens a session, plays a
short episode through the wire protocol, and fetches the score.

Run:  python3 demos/service_client.py
"""

import threading
import time

import httpx
import uvicorn

from bricklab.service import create_app
from bricklab.shapes import load_shape_library

library = load_shape_library()
app = create_app(library)
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=8731,
                                       log_level="warning"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)

base = "http://127.0.0.1:8731"
with httpx.Client(base_url=base) as client:
    obs = client.post("/sessions", json={"seed": 5, "size": 2}).json()
    sid = obs["session_id"]
    print(f"session {sid[:8]}...: phase={obs['phase']} "
          f"action_space={obs['action_space']}")

    # Disassemble whatever stud the snap map offers, twice.
    for _ in range(2):
        snaps = client.get(f"/sessions/{sid}/snaps",
                           params={"workspace": "table", "polarity": "+"})
        x, y, iid, pt = snaps.text.splitlines()[0].split()[1:]
        r = client.post(f"/sessions/{sid}/action", json={"record": {
            "type": "Disassemble", "x": int(x), "y": int(y), "polarity": "+",
        }}).json()
        print(f"disassemble instance {iid} point {pt}: success={r['success']}")

    client.post(f"/sessions/{sid}/action",
                json={"record": {"type": "SwitchPhase"}})
    final = client.post(f"/sessions/{sid}/action",
                        json={"record": {"type": "End"}}).json()
    print(f"episode over: score={final['score']}")

    png = client.get(f"/sessions/{sid}/frames/table.png")
    print(f"final table frame: {len(png.content)} PNG bytes")
    client.delete(f"/sessions/{sid}")

server.should_exit = True
thread.join(timeout=5)
