"""Smoke test for the authlab Python extension."""

import os
import tempfile

import authlab


def main():
    lab = authlab.ProposedLab("tiny", seed=3)
    card = lab.register("alice", "hunter2")
    sk = lab.login(card, "alice", "hunter2")
    assert len(sk) > 0
    assert lab.login(card, "alice", "hunter2") != sk

    try:
        lab.login(card, "alice", "wrong")
    except authlab.RejectError as e:
        print("proposed wrong password rejected:", e)
    else:
        raise AssertionError("wrong password accepted")

    card = lab.change_password(card, "alice", "hunter2", "correct horse")
    lab.login(card, "alice", "correct horse")
    restored = authlab.ProposedCard.from_bytes(card.to_bytes())
    assert restored.nid == card.nid
    lab.login(restored, "alice", "correct horse")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "server.state")
        lab.save_state(path)
        assert os.path.getsize(path) > 0

    jl = authlab.JiangLab("tiny", seed=3, delta_t=2)
    jc = jl.register("bob", "pw")
    jl.login(jc, "bob", "pw")
    jl.set_client_skew(5)
    try:
        jl.login(jc, "bob", "pw")
    except authlab.RejectError as e:
        print("jiang skewed login rejected:", e)
    else:
        raise AssertionError("skewed login accepted")

    m = authlab.attack_matrix(seed=1)
    assert m.matches, m.divergences()
    print(m.text())

    for scheme, phase, measured, published, ok in authlab.cost():
        print(scheme, phase, measured, published, "ok" if ok else "differs")
        if scheme == "proposed":
            assert ok

    code, out = authlab.demo("proposed", params="tiny")
    assert code == 0, out
    print("smoke test passed")


if __name__ == "__main__":
    main()
