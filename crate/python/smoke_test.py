"""Smoke test for the pydatapipe extension module.

Build and install it first, e.g. `maturin develop --release -m crates/python/Cargo.toml`.
"""

import pydatapipe as dp


def main():
    # delimiter inference sees which parts were typed values
    r = dp.infer_delimiter([dp.AugText([1, "|", "a,b", "\n"])])
    assert r["delimiter"] == "|" and not r["ambiguous"], r
    r = dp.infer_delimiter([dp.AugText([1, "|", "a", "\n"])])
    assert r["delimiter"] == "|" and r["ambiguous"], r

    t = dp.AugText([7, ",", 2.5, ",", True])
    assert str(t) == "7,2.5,true"
    assert [str(p) for p in t.split(",")] == ["7", "2.5", "true"]
    assert t.parts() == [7, ",", 2.5, ",", True]

    cols = [("id", "int64"), ("score", "float64"), ("name", "text")]
    raw = dp.encode_header("column", "deflate", "q1", cols)
    assert raw[:4] == b"PGEN"
    header, used = dp.decode_header(raw + b"trailing")
    assert used == len(raw)
    assert header == {"format": "column", "codec": "deflate", "query_id": "q1", "columns": cols}

    docs = [{"column1": i, "column2": f"value{i}"} for i in range(1000)]
    packed = dp.json_dedup_encode(docs)
    assert packed.count(b"column1") == 1 and packed.count(b"column2") == 1
    assert dp.json_dedup_decode(packed) == docs
    lines = sum(len(s) + 1 for s in (str(d).replace("'", '"').replace(": ", ":").replace(", ", ",") for d in docs))
    assert len(packed) < 0.6 * lines, (len(packed), lines)

    assert dp.parse_target("/tmp/out.csv") is None
    assert dp.parse_target("db://B?workers=4&query=q") == {"system": "B", "workers": 4, "query": "q"}
    assert dp.parse_target("/tmp/__pipe__B", template="/tmp/__pipe__[Name]")["system"] == "B"

    rows = dp.generate_dataset(5, seed=1)
    assert len(rows) == 5 and len(rows[0]) == 7
    assert rows == dp.generate_dataset(5, seed=1)

    with dp.Directory() as directory:
        for mode in ["file_csv", "pipe_text", "pipe_row", "pipe_column"]:
            for codec in ["none", "rle", "deflate"]:
                r = dp.run_transfer(2000, mode=mode, codec=codec, workers=2, directory=directory.address)
                assert r["exact"] and r["rows"] == 2000, r
        print(f"transfers ok through directory {directory.address}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
