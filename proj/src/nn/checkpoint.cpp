#include <rotordiag/nn/checkpoint.hpp>

#include "../byteio.hpp"

#include <limits>

namespace rotordiag::nn {

namespace {

enum Tag : std::uint8_t { kConv = 1, kReLU, kMaxPool, kAvgPool, kFlatten, kDense, kSoftmax };

constexpr char kMagic[] = "RDGN";

std::uint32_t field(int v) {
    require(v >= 0, Errc::InvalidArgument, "checkpoint: negative layer field");
    return static_cast<std::uint32_t>(v);
}

int read_field(detail::ByteReader& r) {
    const std::uint32_t v = r.u32();
    if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        fail(Errc::Malformed, "checkpoint: layer field out of range");
    return static_cast<int>(v);
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelSpec& spec, const ModelParams& params) {
    check_params(spec, params);
    require(spec.layers.size() <= 0xFFFF, Errc::InvalidArgument, "checkpoint: too many layers");
    detail::ByteWriter w;
    w.tag(kMagic);
    w.u16(kCheckpointVersion);
    w.u16(static_cast<std::uint16_t>(spec.layers.size()));
    for (const Layer& l : spec.layers) {
        if (const auto* c = std::get_if<Conv>(&l)) {
            w.u8(kConv);
            w.u32(field(c->kernel_h));
            w.u32(field(c->kernel_w));
            w.u32(field(c->in_channels));
            w.u32(field(c->out_channels));
            w.u32(field(c->stride));
        } else if (std::holds_alternative<ReLU>(l)) {
            w.u8(kReLU);
        } else if (const auto* m = std::get_if<MaxPool>(&l)) {
            w.u8(kMaxPool);
            w.u32(field(m->size));
        } else if (const auto* a = std::get_if<AvgPool>(&l)) {
            w.u8(kAvgPool);
            w.u32(field(a->size));
        } else if (std::holds_alternative<Flatten>(l)) {
            w.u8(kFlatten);
        } else if (const auto* d = std::get_if<Dense>(&l)) {
            w.u8(kDense);
            w.u32(field(d->in_dim));
            w.u32(field(d->out_dim));
        } else {
            w.u8(kSoftmax);
        }
    }
    for (const auto& lp : params.layers) {
        for (float v : lp.weights.values())
            w.f32(v);
        for (float v : lp.bias.values())
            w.f32(v);
    }
    return std::move(w.buffer());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < 4)
        fail(Errc::Truncated, "checkpoint: file shorter than its magic");
    if (r.tag() != "RDGN")
        fail(Errc::BadMagic, "checkpoint: bad magic (expected RDGN)");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        fail(Errc::VersionMismatch, "checkpoint: version " + std::to_string(version) + ", expected " +
                                        std::to_string(kCheckpointVersion));
    const std::uint16_t count = r.u16();

    Checkpoint ck;
    for (std::uint16_t i = 0; i < count; ++i) {
        const std::uint8_t tag = r.u8();
        switch (tag) {
        case kConv: {
            Conv c;
            c.kernel_h = read_field(r);
            c.kernel_w = read_field(r);
            c.in_channels = read_field(r);
            c.out_channels = read_field(r);
            c.stride = read_field(r);
            ck.spec.layers.emplace_back(c);
            break;
        }
        case kReLU: ck.spec.layers.emplace_back(ReLU{}); break;
        case kMaxPool: ck.spec.layers.emplace_back(MaxPool{read_field(r)}); break;
        case kAvgPool: ck.spec.layers.emplace_back(AvgPool{read_field(r)}); break;
        case kFlatten: ck.spec.layers.emplace_back(Flatten{}); break;
        case kDense: {
            Dense d;
            d.in_dim = read_field(r);
            d.out_dim = read_field(r);
            ck.spec.layers.emplace_back(d);
            break;
        }
        case kSoftmax: ck.spec.layers.emplace_back(Softmax{}); break;
        default: fail(Errc::Malformed, "checkpoint: unknown layer tag " + std::to_string(tag));
        }
    }
    if (ck.spec.layers.empty() || !std::holds_alternative<Softmax>(ck.spec.layers.back()))
        fail(Errc::Malformed, "checkpoint: model does not end in Softmax");
    for (const Layer& l : ck.spec.layers) {
        if (const auto* c = std::get_if<Conv>(&l))
            if (c->kernel_h <= 0 || c->kernel_w <= 0 || c->in_channels <= 0 || c->out_channels <= 0 ||
                c->stride <= 0)
                fail(Errc::Malformed, "checkpoint: zero-sized Conv field");
        if (const auto* d = std::get_if<Dense>(&l))
            if (d->in_dim <= 0 || d->out_dim <= 0)
                fail(Errc::Malformed, "checkpoint: zero-sized Dense field");
    }

    // size check before allocating, so a corrupt header cannot request gigabytes
    std::uint64_t floats = 0;
    for (const Layer& l : ck.spec.layers) {
        if (const auto* c = std::get_if<Conv>(&l))
            floats += static_cast<std::uint64_t>(c->out_channels) *
                      (static_cast<std::uint64_t>(c->in_channels) * c->kernel_h * c->kernel_w + 1);
        else if (const auto* d = std::get_if<Dense>(&l))
            floats += static_cast<std::uint64_t>(d->out_dim) * (static_cast<std::uint64_t>(d->in_dim) + 1);
    }
    const std::uint64_t needed = floats * 4;
    if (r.remaining() < needed)
        fail(Errc::Truncated, "checkpoint: parameter data truncated (" + std::to_string(r.remaining()) +
                                  " of " + std::to_string(needed) + " bytes)");
    ck.params = zero_params(ck.spec);
    if (r.remaining() < needed)
        fail(Errc::Truncated, "checkpoint: parameter data truncated (" + std::to_string(r.remaining()) +
                                  " of " + std::to_string(needed) + " bytes)");
    for (auto& lp : ck.params.layers) {
        for (float& v : lp.weights.values())
            v = r.f32();
        for (float& v : lp.bias.values())
            v = r.f32();
    }
    if (r.remaining() != 0)
        fail(Errc::Malformed, "checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
    return ck;
}

void save_checkpoint(const ModelSpec& spec, const ModelParams& params, const std::filesystem::path& path) {
    detail::write_file(path, encode_checkpoint(spec, params));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(detail::read_file(path));
}

} // namespace rotordiag::nn
