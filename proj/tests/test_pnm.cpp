#include "doctest.h"
#include "support.h"
#include "swarmsense/error.h"
#include "swarmsense/pnm.h"

using namespace swarmsense;

TEST_CASE("graymap round trip") {
  Image img(5, 3, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i) / 14.0;
  const std::string bytes = encode_pnm(img);
  CHECK(bytes.rfind("P5\n5 3\n255\n", 0) == 0);
  const Image back = decode_pnm(bytes);
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 3);
  REQUIRE(back.channels == 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(0.5 / 255));
}

TEST_CASE("pixmap round trip and clamping") {
  Image img(2, 2, 3, 0.5);
  img.data[0] = -1.0;
  img.data[1] = 2.0;
  const Image back = decode_pnm(encode_pnm(img));
  CHECK(back.channels == 3);
  CHECK(back.data[0] == 0.0);
  CHECK(back.data[1] == 1.0);
  CHECK(back.data[2] == doctest::Approx(128.0 / 255));
  CHECK(testing::category_of([] { encode_pnm(Image(2, 2, 2)); }) == ErrorCategory::InvalidArgument);
}

TEST_CASE("mask encodes as 0 and 255") {
  BinaryGrid m(3, 1, 1, 0);
  m.data[1] = 1;
  const std::string bytes = encode_pgm(m);
  const std::string body = bytes.substr(bytes.size() - 3);
  CHECK(static_cast<unsigned char>(body[0]) == 0);
  CHECK(static_cast<unsigned char>(body[1]) == 255);
  CHECK(static_cast<unsigned char>(body[2]) == 0);
}

TEST_CASE("normalized graymap spans the byte range") {
  const Image back = decode_pnm(encode_pgm_normalized({2.0, 4.0, 3.0, 2.0}, 2, 2));
  CHECK(back.data[0] == 0.0);
  CHECK(back.data[1] == 1.0);
  CHECK(back.data[2] == doctest::Approx(128.0 / 255));
  const Image flat = decode_pnm(encode_pgm_normalized({7.0, 7.0}, 2, 1));
  CHECK(flat.data[0] == 0.0);
}

TEST_CASE("malformed any-maps are rejected") {
  CHECK_THROWS_AS(decode_pnm("P2\n1 1\n255\n0"), Error);
  CHECK_THROWS_AS(decode_pnm("P5\n4 4\n255\nab"), Error);
  CHECK_THROWS_AS(decode_pnm(""), Error);
}

TEST_CASE("base64 vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foob") == "Zm9vYg==");
  CHECK(base64_encode("fooba") == "Zm9vYmE=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(base64_encode(std::string("\xff\x00\x10", 3)) == "/wAQ");
}

TEST_CASE("downscale bounds the longer side") {
  Image img(640, 512, 3, 0.25);
  const Image small = downscale(img, 256);
  CHECK(small.width <= 256);
  CHECK(small.height <= 256);
  CHECK(small.data[0] == doctest::Approx(0.25));
  const Image same = downscale(Image(128, 128, 1, 0.1), 256);
  CHECK(same.width == 128);

  Image checker(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker.at(x, y, 0) = (x + y) % 2;
  const Image avg = downscale(checker, 2);
  CHECK(avg.width == 2);
  for (double v : avg.data) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("file helpers report the path") {
  testing::TempDir dir("pnm");
  write_file(dir.path() / "a.bin", std::string("x\0y", 3));
  CHECK(read_file(dir.path() / "a.bin") == std::string("x\0y", 3));
  try {
    read_file(dir.path() / "missing.bin");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Io);
    CHECK(std::string(e.what()).find("missing.bin") != std::string::npos);
  }
  CHECK(testing::category_of([&] { write_file(dir.path() / "no" / "dir" / "f", "x"); }) == ErrorCategory::Io);
}
