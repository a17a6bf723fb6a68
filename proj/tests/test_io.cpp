#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ucfeas/instance_io.hpp"

using namespace ucfeas;

namespace {
struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};
}  // namespace

TEST_CASE("sparse instances round-trip bit-exactly") {
    TempFile tmp("io_safp_tmp.txt");
    StoredInstance st;
    st.kind = StoredInstance::Kind::Safp;
    st.family = "safp";
    st.seed = 7;
    st.safp = gen_safp(15, 6, 3, 7);
    save_instance(tmp.path, st);

    auto back = load_instance(tmp.path);
    REQUIRE(back.kind == StoredInstance::Kind::Safp);
    REQUIRE(back.family == "safp");
    REQUIRE(back.seed == std::optional<std::uint64_t>{7});
    REQUIRE(back.safp.s == 3);
    REQUIRE(back.safp.A.rows == 6);
    REQUIRE(back.safp.A.data == st.safp.A.data);
    REQUIRE(back.safp.b == st.safp.b);
    REQUIRE(back.safp.ground_truth == st.safp.ground_truth);
}

TEST_CASE("complementarity instances round-trip with metadata") {
    TempFile tmp("io_lcp_tmp.txt");
    StoredInstance st;
    st.kind = StoredInstance::Kind::Lcp;
    st.family = "lcp3";
    st.seed = 11;
    st.normalized = true;
    st.lcp = normalize_lcp(gen_lcp3(5, 11));
    save_instance(tmp.path, st);

    auto back = load_instance(tmp.path);
    REQUIRE(back.kind == StoredInstance::Kind::Lcp);
    REQUIRE(back.family == "lcp3");
    REQUIRE(back.normalized);
    REQUIRE(back.seed == std::optional<std::uint64_t>{11});
    REQUIRE(back.lcp.M.data == st.lcp.M.data);
    REQUIRE(back.lcp.b == st.lcp.b);

    // A second save of the loaded copy is byte-identical.
    TempFile tmp2("io_lcp_tmp2.txt");
    save_instance(tmp2.path, back);
    std::ifstream a(tmp.path), b(tmp2.path);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    REQUIRE(sa == sb);
}

TEST_CASE("instances without ground truth omit the optional block") {
    TempFile tmp("io_nogt_tmp.txt");
    StoredInstance st;
    st.kind = StoredInstance::Kind::Safp;
    st.family = "safp";
    st.safp = gen_safp(8, 4, 2, 1);
    st.safp.ground_truth.reset();
    save_instance(tmp.path, st);
    auto back = load_instance(tmp.path);
    REQUIRE(!back.safp.ground_truth.has_value());
    REQUIRE(!back.seed.has_value());
}

TEST_CASE("loader rejects malformed containers") {
    TempFile tmp("io_bad_tmp.txt");
    auto write = [&](const std::string& body) {
        std::ofstream out(tmp.path);
        out << body;
    };
    write("not an instance\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);

    write("ucfeas-instance v1\nkind lcp\nfamily x\nn 2\nmatrix M 2 2\n1 2\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);  // truncated matrix

    write("ucfeas-instance v1\nkind lcp\nfamily x\nn 2\nmatrix M 2 2\n1 2\n3 4\nvector b 2\n1\nend\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);  // short vector

    write("ucfeas-instance v1\nkind lcp\nfamily x\nn 3\nmatrix M 2 2\n1 2\n3 4\nvector b 2\n1 2\nend\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);  // shape mismatch

    write("ucfeas-instance v1\nkind lcp\nfamily x\nn 2\nmatrix M 2 2\n1 2\n3 4\nvector b 2\n1 2\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);  // missing end

    write("ucfeas-instance v1\nkind weird\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);

    write("ucfeas-instance v1\nbogus 1\nend\n");
    REQUIRE_THROWS_AS(load_instance(tmp.path), ParseError);

    REQUIRE_THROWS_AS(load_instance("definitely_missing_file.txt"), ParseError);
}
