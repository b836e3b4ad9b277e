#include "doctest.h"
#include "ekiden/crypto.hpp"
#include "ekiden/rng.hpp"
#include "ekiden/wire.hpp"

using namespace ekiden;

TEST_CASE("encode/decode round-trips all field kinds") {
  wire::Encoder e;
  e.tag("test.record");
  e.u64(0xdeadbeefcafef00dull);
  e.u32(7);
  e.boolean(true);
  e.str("payload");
  e.bytes(Bytes{0, 1, 2, 255});

  wire::Decoder d(ByteView(e.out.data(), e.out.size()));
  d.tag("test.record");
  CHECK(d.u64() == 0xdeadbeefcafef00dull);
  CHECK(d.u32() == 7);
  CHECK(d.boolean() == true);
  CHECK(d.str() == "payload");
  CHECK(d.bytes() == Bytes{0, 1, 2, 255});
  CHECK(d.done());
}

TEST_CASE("decoder rejects wrong tag, truncation, trailing bytes") {
  wire::Encoder e;
  e.tag("a");
  e.u64(1);

  {
    wire::Decoder d(ByteView(e.out.data(), e.out.size()));
    CHECK_THROWS_AS(d.tag("b"), Error);
  }
  {
    wire::Decoder d(ByteView(e.out.data(), e.out.size() - 1));
    d.tag("a");
    CHECK_THROWS_AS(d.u64(), Error);
  }
  {
    wire::Decoder d(ByteView(e.out.data(), e.out.size()));
    d.tag("a");
    CHECK_THROWS_AS(d.expect_done(), Error);
    (void)d.u64();
    CHECK_NOTHROW(d.expect_done());
  }
}

TEST_CASE("random byte-string round trip holds") {
  Rng rng(99);
  for (int trial = 0; trial < 200; trial++) {
    size_t n = rng.uniform(200);
    Bytes payload = rng.bytes(n);
    uint64_t num = rng.next_u64();

    wire::Encoder e;
    e.tag("t");
    e.bytes(payload);
    e.u64(num);

    wire::Decoder d(ByteView(e.out.data(), e.out.size()));
    d.tag("t");
    CHECK(d.bytes() == payload);
    CHECK(d.u64() == num);
    d.expect_done();
  }
}

TEST_CASE("field order is fixed: swapping fields changes bytes") {
  wire::Encoder a, b;
  a.u64(1);
  a.u64(2);
  b.u64(2);
  b.u64(1);
  CHECK(a.out != b.out);
}

TEST_CASE("list encoding round trip") {
  std::vector<uint64_t> xs = {3, 1, 4, 1, 5};
  wire::Encoder e;
  e.list<uint64_t>(xs, [](wire::Encoder& enc, const uint64_t& v) { enc.u64(v); });
  wire::Decoder d(ByteView(e.out.data(), e.out.size()));
  auto ys = d.list<uint64_t>([](wire::Decoder& dec) { return dec.u64(); });
  CHECK(xs == ys);
}

TEST_CASE("rng is deterministic per seed and fork label") {
  Rng a(7), b(7), c(8);
  CHECK(a.bytes(32) == b.bytes(32));
  CHECK(a.bytes(32) == b.bytes(32));
  CHECK(Rng(7).bytes(16) != c.bytes(16));

  Rng p(7), q(7);
  CHECK(p.fork("x").bytes(8) == q.fork("x").bytes(8));
  CHECK(Rng(7).fork("x").bytes(8) != Rng(7).fork("y").bytes(8));
}

TEST_CASE("rng uniform stays in range") {
  Rng rng(1);
  for (int i = 0; i < 1000; i++) CHECK(rng.uniform(13) < 13);
}
