#!/usr/bin/env python3
"""Regenerates the binary fixtures in this directory.

Golden pcaps come from scapy's PcapWriter (an independent, widely used
writer); image fixtures are padded to exact sizes so carving tests can
byte-compare them. Requires: scapy, Pillow.
"""
import io
import random
import struct
import zlib

from PIL import Image
from scapy.all import Ether, PcapWriter, Raw


def golden_pcaps():
    w = PcapWriter("golden_empty.pcap", linktype=1, sync=True)
    w.close()
    pkt = Ether(dst="02:00:00:00:00:02", src="02:00:00:00:00:01", type=0x88B5) / Raw(bytes(range(46)))
    assert len(pkt) == 60
    pkt.time = 1.5
    w = PcapWriter("golden_one.pcap", linktype=1, sync=True)
    w.write(pkt)
    w.close()


def swapped_variant():
    b = open("golden_one.pcap", "rb").read()
    out = struct.pack(">IHHiIII", *struct.unpack("<IHHiIII", b[:24]))
    off = 24
    while off < len(b):
        ts, us, incl, orig = struct.unpack("<IIII", b[off:off + 16])
        out += struct.pack(">IIII", ts, us, incl, orig) + b[off + 16:off + 16 + incl]
        off += 16 + incl
    open("golden_one_swapped.pcap", "wb").write(out)


def unsupported_formats():
    shb = struct.pack("<IIIHHqI", 0x0A0D0D0A, 28, 0x1A2B3C4D, 1, 0, -1, 28)
    open("sample.pcapng", "wb").write(shb)
    open("nanosecond.pcap", "wb").write(struct.pack("<IHHiIII", 0xA1B23C4D, 2, 4, 0, 0, 65535, 1))


def images():
    rnd = random.Random(1234)

    img = Image.new("RGB", (48, 48))
    img.putdata([(rnd.randrange(256), rnd.randrange(256), rnd.randrange(256)) for _ in range(48 * 48)])
    for q in range(95, 5, -1):
        buf = io.BytesIO()
        img.save(buf, "JPEG", quality=q)
        d = buf.getvalue()
        if len(d) + 4 <= 4096:
            break
    pad = 4096 - len(d) - 4
    com = b"\xff\xfe" + struct.pack(">H", pad + 2) + b"\x00" * pad
    d = d[:2] + com + d[2:]
    assert len(d) == 4096 and d.find(b"\xff\xd9") == len(d) - 2
    open("planted.jpg", "wb").write(d)

    img = Image.new("RGB", (40, 40))
    img.putdata([(rnd.randrange(256), rnd.randrange(256), rnd.randrange(256)) for _ in range(40 * 40)])
    buf = io.BytesIO()
    img.save(buf, "PNG")
    d = buf.getvalue()
    iend = d.rfind(b"IEND") - 4
    data = b"Comment\x00" + b"x" * (8192 - len(d) - 12 - 8)
    chunk = struct.pack(">I", len(data)) + b"tEXt" + data + struct.pack(">I", zlib.crc32(b"tEXt" + data) & 0xFFFFFFFF)
    d = d[:iend] + chunk + d[iend:]
    assert len(d) == 8192
    open("planted.png", "wb").write(d)

    rnd = random.Random(99)
    img = Image.new("RGB", (16, 16))
    img.putdata([(rnd.randrange(256),) * 3 for _ in range(256)])
    buf = io.BytesIO()
    img.save(buf, "PNG")
    open("small.png", "wb").write(buf.getvalue())


if __name__ == "__main__":
    golden_pcaps()
    swapped_variant()
    unsupported_formats()
    images()
