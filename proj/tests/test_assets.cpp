#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "facegen/assets.hpp"
#include "facegen/errors.hpp"
#include "facegen/obj.hpp"
#include "facegen/rgbe.hpp"
#include "test_util.hpp"

using namespace facegen;
namespace fs = std::filesystem;

namespace {

std::string landmark_text(int count, int header) {
  std::ostringstream out;
  out << "count " << header << "\n";
  for (int i = 0; i < count; ++i) out << i << " " << 0.001 * i << " 0.1 0.2 " << (i < 20 ? "outline" : "eye") << "\n";
  return out.str();
}

const char* kCube = R"(mtllib cube.mtl
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
usemtl skin
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 4 8 7
f 4 7 3
f 1 5 8
f 1 8 4
f 2 3 7
f 2 7 6
)";

}  // namespace

TEST_CASE("landmark files need exactly 50 entries") {
  std::istringstream ok(landmark_text(50, 50));
  const LandmarkSet set = parse_landmarks(ok, "ok.lmk");
  CHECK(set[49].index == 49);
  CHECK(set[25].region == Region::eye);

  std::istringstream short_file(landmark_text(49, 49));
  CHECK_THROWS_WITH_AS(parse_landmarks(short_file, "short.lmk"), doctest::Contains("expected 50 landmarks"),
                       ValidationError);

  std::istringstream bad_region("count 50\n0 0 0 0 nose\n");
  try {
    parse_landmarks(bad_region, "bad.lmk");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("cube OBJ loads as a face model with 12 triangles") {
  const fs::path dir = test_util::scratch_dir("cube");
  std::ofstream(dir / "cube.obj") << kCube;
  std::ofstream(dir / "cube.mtl") << "newmtl skin\nKd 1 1 1\n";
  std::ofstream lmk(dir / "cube.lmk");
  lmk << "count 50\n";
  for (int i = 0; i < 50; ++i) lmk << i << " " << 0.01 * (i % 7) << " " << 0.01 * (i % 5) << " 0.4 head\n";
  lmk.close();
  const FaceModel model = load_face_model(dir / "cube.obj", dir / "cube.lmk", "cube");
  CHECK(model.mesh.triangles.size() == 12);
  CHECK(model.landmarks[10].region == Region::head);
}

TEST_CASE("OBJ face index past the vertex count reports its line") {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
  try {
    parse_obj(in, "bad.obj");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("degenerate triangles are rejected") {
  TriangleMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  mesh.triangles = {{0, 1, 2}};
  mesh.uv.assign(3, Vec2::Zero());
  mesh.texture = RgbImage(1, 1, {0.5f, 0.5f, 0.5f});
  CHECK_THROWS_WITH_AS(validate_mesh(mesh, "flat"), doctest::Contains("degenerate"), ValidationError);
}

TEST_CASE("RGBE decode follows m/256 * 2^(e-128)") {
  const Rgb c = rgbe_to_float({255, 0, 0, 129});
  CHECK(c.r == doctest::Approx(255.0 / 256.0 * 2.0).epsilon(1e-12));
  CHECK(c.g == 0.0f);
  CHECK(rgbe_to_float({0, 0, 0, 0}) == Rgb{0, 0, 0});
  CHECK(rgbe_to_float({200, 100, 50, 0}) == Rgb{0, 0, 0});
}

// Canonical: the largest mantissa is at least 128 and the value lies above
// the encoder's 1e-32 black cutoff.
TEST_CASE("RGBE decode then reference encode reproduces canonical pixels") {
  test_util::Rng rng(11);
  for (int i = 0; i < 20000; ++i) {
    Rgbe p{static_cast<std::uint8_t>(rng.uniform_int(0, 255)), static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
           static_cast<std::uint8_t>(rng.uniform_int(0, 255)), static_cast<std::uint8_t>(rng.uniform_int(24, 255))};
    const int top = std::max({p.r, p.g, p.b});
    if (top < 128) p.r = static_cast<std::uint8_t>(128 + top % 128);  // reference encoder output
    REQUIRE(float_to_rgbe(rgbe_to_float(p)) == p);
  }
}

TEST_CASE("HDR files round-trip and enforce 2:1") {
  const fs::path dir = test_util::scratch_dir("hdr");
  RgbImage wide(64, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 64; ++x) wide(x, y) = {0.01f * x, 0.1f * y, 3.0f};
  write_hdr(dir / "wide.hdr", wide);
  const Environment env = load_environment(dir / "wide.hdr", "wide");
  CHECK(env.radiance.width() == 64);
  CHECK(env.radiance(10, 5).b == doctest::Approx(3.0).epsilon(0.01));

  write_hdr(dir / "square.hdr", RgbImage(512, 512, {1, 1, 1}));
  CHECK_THROWS_WITH_AS(load_environment(dir / "square.hdr"), doctest::Contains("not equirectangular 2:1"),
                       ValidationError);

  std::vector<std::uint8_t> bytes = encode_hdr(wide);
  bytes.resize(bytes.size() - 100);
  CHECK_THROWS_AS(decode_hdr(bytes, "cut.hdr"), ParseError);
  const std::string junk = "P6\n1 1\n255\n";
  CHECK_THROWS_AS(decode_hdr(std::span(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size())), ParseError);
}

TEST_CASE("test heads are deterministic with the documented landmark partition") {
  const FaceModel a = make_test_head(7, 8);
  const FaceModel b = make_test_head(7, 8);
  CHECK(a.mesh.vertices == b.mesh.vertices);
  CHECK(a.mesh.triangles == b.mesh.triangles);
  CHECK(a.mesh.texture == b.mesh.texture);
  for (int i = 0; i < kLandmarkCount; ++i) CHECK(a.landmarks[i].position == b.landmarks[i].position);

  for (std::uint64_t seed : {0u, 3u, 99u}) {
    const FaceModel m = make_test_head(seed, 2);
    std::map<Region, int> counts;
    for (const Landmark& l : m.landmarks) ++counts[l.region];
    CHECK(counts[Region::outline] == 20);
    CHECK(counts[Region::eye] == 12);
    CHECK(counts[Region::mouth] == 10);
    CHECK(counts[Region::head] == 8);
    CHECK_NOTHROW(validate_face_model(m));
  }
  CHECK_NOTHROW(validate_face_model(make_test_head(5, 1)));
  CHECK_THROWS_AS(make_test_head(5, 0), ValidationError);
}

TEST_CASE("face models survive a write and reload") {
  const fs::path dir = test_util::scratch_dir("roundtrip");
  const FaceModel head = make_test_head(21, 3);
  write_face_model(head, dir, "head");
  const FaceModel back = load_face_model(dir / "head.obj", dir / "head.lmk", "head");
  REQUIRE(back.mesh.vertices.size() == head.mesh.vertices.size());
  for (std::size_t i = 0; i < head.mesh.vertices.size(); ++i)
    CHECK((back.mesh.vertices[i] - head.mesh.vertices[i]).norm() < 1e-6);
  for (int i = 0; i < kLandmarkCount; ++i) {
    CHECK((back.landmarks[i].position - head.landmarks[i].position).norm() < 1e-6);
    CHECK(back.landmarks[i].region == head.landmarks[i].region);
  }
  CHECK(back.mesh.triangles == head.mesh.triangles);
}

TEST_CASE("meshes with two textures are rejected") {
  const fs::path dir = test_util::scratch_dir("twotex");
  std::ofstream(dir / "m.obj") << "mtllib m.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
  std::ofstream(dir / "m.mtl") << "newmtl a\nmap_Kd a.png\nnewmtl b\nmap_Kd b.png\n";
  CHECK_THROWS_AS(load_textured_mesh(dir / "m.obj"), ValidationError);
}

TEST_CASE("manifest validation reports per-asset failures") {
  const fs::path dir = test_util::scratch_dir("manifest");
  write_face_model(make_test_head(1, 2), dir, "good");
  write_face_model(make_test_head(2, 2), dir, "short");
  std::ofstream(dir / "short.lmk") << landmark_text(49, 49);
  write_hdr(dir / "square.hdr", RgbImage(16, 16, {1, 1, 1}));
  std::ofstream(dir / "assets.json") << R"({
    "anchor": "good",
    "models": [
      {"id": "good", "mesh": "good.obj", "landmarks": "good.lmk"},
      {"id": "short", "mesh": "short.obj", "landmarks": "short.lmk"}
    ],
    "environments": [
      {"id": "square", "path": "square.hdr"},
      {"id": "sky", "procedural": {"seed": 4}}
    ]
  })";
  const auto checks = validate_assets(read_manifest(dir / "assets.json"));
  std::map<std::string, AssetCheck> by_id;
  for (const auto& c : checks) by_id[c.id] = c;
  CHECK(by_id.at("good").ok);
  CHECK_FALSE(by_id.at("short").ok);
  CHECK(by_id.at("short").reason.find("expected 50 landmarks") != std::string::npos);
  CHECK_FALSE(by_id.at("square").ok);
  CHECK(by_id.at("square").reason.find("not equirectangular 2:1") != std::string::npos);
  CHECK(by_id.at("sky").ok);

  for (const auto& c : validate_assets(builtin_manifest())) CHECK_MESSAGE(c.ok, c.id << ": " << c.reason);
}
