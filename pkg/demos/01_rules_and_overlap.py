"""
Ternary match rules
===================

A forwarding rule matches packets on five header fields; each bit of the
104-bit layout is 0, 1, or don't-care.  Two rules are *distinct* when some
bit is pinned to opposite values, so no packet can match both.
"""

from prelude.rules import (
    FlowSpec,
    PROTO_TCP,
    PROTO_UDP,
    decode,
    distinct,
    encode,
    encode_packet,
    format_rule,
    matches,
    overlaps,
    parse_rule,
)

# Build rules from header field constraints.
web_spec = FlowSpec(ip_proto=PROTO_TCP, dst_port=80)
web = encode(web_spec)
ssh = encode(FlowSpec(ip_proto=PROTO_TCP, dst_port=22))
dns = encode(FlowSpec(ip_proto=PROTO_UDP, dst_port=53))
any_tcp = encode(FlowSpec(ip_proto=PROTO_TCP))

print("web  :", format_rule(web_spec))
print("ssh  :", format_rule(decode(ssh)))

# Overlap is symmetric and means "some packet matches both".
for a, name_a, b, name_b in [
    (web, "web", any_tcp, "any_tcp"),
    (web, "web", ssh, "ssh"),
    (web, "web", dns, "dns"),
]:
    verdict = "overlap" if overlaps(a, b) else "distinct"
    print(f"{name_a:8s} vs {name_b:8s} -> {verdict}")
    assert overlaps(a, b) == (not distinct(a, b))

# A concrete packet witnesses the web/any_tcp overlap.
packet = encode_packet(src_ip=0x0A000001, dst_ip=0xC0A80001,
                       src_port=49152, dst_port=80, proto=PROTO_TCP)
assert matches(web, packet) and matches(any_tcp, packet)
assert not matches(ssh, packet)
print("packet dst_port=80 matches web and any_tcp, not ssh")

# Rules round-trip through their text form and back to field view.
text = format_rule(web_spec)
assert encode(parse_rule(text)) == web
print("field view of web:", decode(web))
