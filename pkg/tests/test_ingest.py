import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from breakline_dtm.errors import (
    EmptyInputError,
    MalformedRecordError,
    UnsupportedFormatError,
)
from breakline_dtm.ingest import (
    BBox,
    PointCloud,
    bounds,
    read_points,
    write_points_xyz,
)


def make_las(points, scale=(0.01, 0.01, 0.01), offset=(0.0, 0.0, 0.0),
             version=(1, 2), fmt=0, declared_count=None, extra_record_bytes=8):
    """Hand-assembled LAS file, point records as raw int32 XYZ plus padding."""
    rec_len = 12 + extra_record_bytes
    header_size = {2: 227, 3: 235, 4: 375}[version[1]]
    header = bytearray(header_size)
    header[0:4] = b"LASF"
    header[24] = version[0]
    header[25] = version[1]
    struct.pack_into("<H", header, 94, header_size)
    struct.pack_into("<I", header, 96, header_size)
    header[104] = fmt
    struct.pack_into("<H", header, 105, rec_len)
    n = len(points) if declared_count is None else declared_count
    if version[1] >= 4:
        struct.pack_into("<Q", header, 247, n)
    else:
        struct.pack_into("<I", header, 107, n)
    struct.pack_into("<3d", header, 131, *scale)
    struct.pack_into("<3d", header, 155, *offset)
    body = bytearray()
    for ix, iy, iz in points:
        body += struct.pack("<3i", ix, iy, iz) + b"\x00" * extra_record_bytes
    return bytes(header) + bytes(body)


def test_text_mixed_separators():
    pc = read_points(b"1.0 2.0 3.0\n4,5,6\n")
    assert pc.xyz.tolist() == [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]


def test_text_comments_blank_lines_extra_fields():
    data = b"# header\n\n1 2 3 99 98\n  4\t5,6\n"
    pc = read_points(data)
    assert pc.count == 2
    assert pc.xyz[1].tolist() == [4.0, 5.0, 6.0]


def test_text_crlf_line_endings():
    pc = read_points(b"1 2 3\r\n4 5 6\r\n")
    assert pc.count == 2


def test_text_only_comments_is_empty():
    with pytest.raises(EmptyInputError):
        read_points(b"# nothing\n# here\n")


def test_empty_stream_raises():
    with pytest.raises(EmptyInputError):
        read_points(b"")


def test_malformed_lenient_skips_and_counts():
    pc = read_points(b"1 2 3\nnot a point\n4 5\n7 8 9\n")
    assert pc.count == 2
    assert pc.skipped_records == 2


def test_malformed_strict_raises():
    with pytest.raises(MalformedRecordError):
        read_points(b"1 2 3\nbad line\n", strict=True)


def test_nonfinite_dropped_and_counted():
    pc = read_points(b"1 2 3\n4 5 nan\n6 7 inf\n8 9 10\n")
    assert pc.count == 2
    assert pc.dropped_nonfinite == 2


def test_las_scale_offset_decoding():
    # raw X=250 with scale 0.01 offset 100 -> 102.5, decoded per the
    # header arithmetic done by hand in make_las
    data = make_las([(250, 300, 400)], scale=(0.01, 0.01, 0.01), offset=(100, 200, 300))
    pc = read_points(data)
    assert pc.xyz[0] == pytest.approx([102.5, 203.0, 304.0], abs=1e-12)


def test_las_auto_detection_and_explicit():
    data = make_las([(0, 0, 0), (100, 100, 100)])
    assert read_points(data).count == 2
    assert read_points(data, fmt="las").count == 2


def test_las_14_point_format_6():
    data = make_las([(1, 2, 3)], version=(1, 4), fmt=6, extra_record_bytes=18)
    pc = read_points(data)
    assert pc.xyz[0] == pytest.approx([0.01, 0.02, 0.03])


def test_las_truncated_body_lenient_vs_strict():
    data = make_las([(1, 1, 1), (2, 2, 2)], declared_count=5)
    pc = read_points(data)
    assert pc.count == 2
    assert pc.skipped_records == 3
    with pytest.raises(MalformedRecordError):
        read_points(data, strict=True)


def test_las_compressed_flag_rejected():
    data = make_las([(1, 1, 1)], fmt=0x80)
    with pytest.raises(UnsupportedFormatError):
        read_points(data)


def test_bad_magic_rejected_as_las():
    with pytest.raises(UnsupportedFormatError):
        read_points(b"NOPE" + b"\x00" * 300, fmt="las")


def test_bounds_basic_and_degenerate():
    pc = PointCloud(np.array([[0, 0, 1], [2, 3, 1]], dtype=float))
    assert bounds(pc) == BBox(0, 0, 2, 3)
    single = PointCloud(np.array([[5.0, 5.0, 5.0]]))
    assert bounds(single) == BBox(5, 5, 5, 5)


def test_bounds_matches_linear_scan():
    rng = np.random.default_rng(42)
    xyz = np.column_stack(
        [rng.uniform(0, 10, 1000), rng.uniform(0, 10, 1000), rng.uniform(0, 10, 1000)]
    )
    pc = PointCloud(xyz)
    bb = bounds(pc)
    # brute-force oracle: scan every point
    mnx = mny = np.inf
    mxx = mxy = -np.inf
    for x, y, _ in xyz:
        mnx, mxx = min(mnx, x), max(mxx, x)
        mny, mxy = min(mny, y), max(mxy, y)
    assert (bb.min_x, bb.min_y, bb.max_x, bb.max_y) == (mnx, mny, mxx, mxy)


def test_bounds_empty_raises():
    with pytest.raises(EmptyInputError):
        bounds(PointCloud(np.empty((0, 3))))


def test_read_is_deterministic():
    data = b"1.5 2.5 3.5\n-4 5 -6\n"
    a = read_points(data)
    b = read_points(data)
    assert np.array_equal(a.xyz, b.xyz)


@settings(max_examples=50)
@given(
    st.lists(
        st.tuples(
            st.floats(-1e5, 1e5).map(lambda v: round(v, 6)),
            st.floats(-1e5, 1e5).map(lambda v: round(v, 6)),
            st.floats(-1e3, 1e3).map(lambda v: round(v, 6)),
        ),
        min_size=1,
        max_size=40,
    )
)
def test_xyz_text_round_trip(points):
    pc = PointCloud(np.asarray(points, dtype=float))
    buf = io.StringIO()
    write_points_xyz(pc, buf)
    back = read_points(buf.getvalue().encode())
    assert np.allclose(back.xyz, pc.xyz, atol=5e-7)


def test_pointcloud_is_read_only():
    pc = read_points(b"1 2 3\n")
    with pytest.raises(ValueError):
        pc.xyz[0, 0] = 9.0
