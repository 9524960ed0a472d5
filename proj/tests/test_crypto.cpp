#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "tdp/crypto.hpp"

using namespace tdp;

namespace {

std::vector<std::uint8_t> unhex(const std::string& s) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>(std::stoi(s.substr(i, 2), nullptr, 16)));
    return out;
}

std::string hex(std::span<const std::uint8_t> b) {
    static const char* dig = "0123456789abcdef";
    std::string s;
    for (auto x : b) {
        s += dig[x >> 4];
        s += dig[x & 15];
    }
    return s;
}

crypto::Key128 key_from_hex(const std::string& s) {
    crypto::Key128 k;
    const auto b = unhex(s);
    std::copy(b.begin(), b.end(), k.begin());
    return k;
}

}  // namespace

TEST_CASE("AES-128 FIPS-197 appendix C.1 vector") {
    const crypto::Aes128 aes(key_from_hex("000102030405060708090a0b0c0d0e0f"));
    const auto pt = unhex("00112233445566778899aabbccddeeff");
    std::uint8_t ct[16];
    aes.encrypt_block(pt.data(), ct);
    CHECK(hex({ct, 16}) == "69c4e0d86a7b0430d8cdb78070b4c55a");
}

TEST_CASE("AES-CMAC RFC 4493 vectors") {
    const crypto::Cmac cmac(key_from_hex("2b7e151628aed2a6abf7158809cf4f3c"));
    const auto msg = unhex(
        "6bc1bee22e409f96e93d7e117393172a"
        "ae2d8a571e03ac9c9eb76fac45af8e51"
        "30c81c46a35ce411e5fbc1191a0a52ef"
        "f69f2445df4f9b17ad2b417be66c3710");

    CHECK(hex(cmac.compute({msg.data(), 0})) == "bb1d6929e95937287fa37d129b756746");
    CHECK(hex(cmac.compute({msg.data(), 16})) == "070a16b46b4d4144f79bdd9dd04a287c");
    CHECK(hex(cmac.compute({msg.data(), 40})) == "dfa66747de9ae63030ca32611497c827");
    CHECK(hex(cmac.compute({msg.data(), 64})) == "51f0bebf7e3b9d92fc49741779363cfe");
}

TEST_CASE("CMAC streaming equals one-shot for arbitrary splits") {
    const crypto::Cmac cmac(key_from_hex("2b7e151628aed2a6abf7158809cf4f3c"));
    std::mt19937_64 rng(42);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<std::uint8_t> msg(rng() % 200);
        for (auto& b : msg) b = static_cast<std::uint8_t>(rng());

        const crypto::Block oneshot = cmac.compute(msg);
        crypto::Cmac::Stream s(cmac);
        std::size_t off = 0;
        while (off < msg.size()) {
            const std::size_t take = std::min<std::size_t>(msg.size() - off, rng() % 40);
            s.update({msg.data() + off, take});
            off += take;
        }
        CHECK(s.finish() == oneshot);
    }
}

TEST_CASE("CMAC verify accepts the tag and rejects any flipped bit") {
    const crypto::Cmac cmac(key_from_hex("00112233445566778899aabbccddeeff"));
    std::mt19937_64 rng(7);
    std::vector<std::uint8_t> msg(53);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());

    crypto::Block tag = cmac.compute(msg);
    CHECK(cmac.verify(msg, tag.data()));
    for (int bit = 0; bit < 128; ++bit) {
        crypto::Block bad = tag;
        bad[bit / 8] ^= static_cast<std::uint8_t>(1 << (bit % 8));
        CHECK_FALSE(cmac.verify(msg, bad.data()));
    }
}

TEST_CASE("AES-CTR SP800-38A F.5.1 vector") {
    const crypto::Aes128 aes(key_from_hex("2b7e151628aed2a6abf7158809cf4f3c"));
    crypto::Block ctr;
    const auto iv = unhex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff");
    std::copy(iv.begin(), iv.end(), ctr.begin());

    auto data = unhex(
        "6bc1bee22e409f96e93d7e117393172a"
        "ae2d8a571e03ac9c9eb76fac45af8e51"
        "30c81c46a35ce411e5fbc1191a0a52ef"
        "f69f2445df4f9b17ad2b417be66c3710");
    crypto::ctr_crypt(aes, ctr, data);
    CHECK(hex(data) ==
          "874d6191b620e3261bef6864990db6ce"
          "9806f66b7970fdff8617187bb9fffdff"
          "5ae4df3edbd5d35e5b4f09020db03eab"
          "1e031dda2fbe03d1792170a0f3009cee");

    // Decrypt = encrypt.
    crypto::ctr_crypt(aes, ctr, data);
    CHECK(hex({data.data(), 16}) == "6bc1bee22e409f96e93d7e117393172a");
}

TEST_CASE("CTR round-trips arbitrary lengths") {
    const crypto::Aes128 aes(key_from_hex("2b7e151628aed2a6abf7158809cf4f3c"));
    std::mt19937_64 rng(11);
    for (std::size_t len : {0u, 1u, 15u, 16u, 17u, 100u, 1500u}) {
        std::vector<std::uint8_t> data(len), orig;
        for (auto& b : data) b = static_cast<std::uint8_t>(rng());
        orig = data;
        crypto::Block ctr{};
        ctr[3] = 9;
        crypto::ctr_crypt(aes, ctr, data);
        if (len > 0) CHECK(data != orig);
        crypto::ctr_crypt(aes, ctr, data);
        CHECK(data == orig);
    }
}

TEST_CASE("SHA-256 FIPS 180 vectors") {
    CHECK(hex(crypto::sha256({})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    crypto::Sha256 h;
    h.update(std::string_view("abc"));
    CHECK(hex(h.finish()) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    crypto::Sha256 h2;
    h2.update(std::string_view("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"));
    CHECK(hex(h2.finish()) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("SHA-256 streaming equals one-shot across splits") {
    std::mt19937_64 rng(3);
    std::vector<std::uint8_t> msg(1000);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());

    for (std::size_t split : {0u, 1u, 63u, 64u, 65u, 999u}) {
        crypto::Sha256 h;
        h.update({msg.data(), split});
        h.update({msg.data() + split, msg.size() - split});
        CHECK(h.finish() == crypto::sha256(msg));
    }
}

TEST_CASE("derive_key is deterministic and label-separated") {
    const auto a = crypto::derive_key(7, "enc");
    const auto b = crypto::derive_key(7, "enc");
    const auto c = crypto::derive_key(7, "int");
    const auto d = crypto::derive_key(8, "enc");
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != d);
}
