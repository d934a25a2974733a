#include "ttvrs/model.hpp"

#include <cmath>

#include "ttvrs/rng.hpp"
#include "ttvrs/synthetic.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ttvrs {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

ModelDims ModelDims::micro()
{
    ModelDims d;
    d.conv1_channels = 4;
    d.feature_dim = 8;
    d.fine_channels = 4;
    d.pos_channels = 4;
    d.raw_token_dim = 8;
    d.token_dim = 8;
    d.proj_hidden = 8;
    d.key_dim = 4;
    d.text_hidden = 8;
    d.role_dim = 4;
    d.vocab = 10;
    return d;
}

ag::Var& ParamSet::add(const std::string& name, Tensor value, bool trainable)
{
    if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
    entries_.push_back({name, trainable ? ag::parameter(std::move(value)) : ag::constant(std::move(value)), trainable});
    return entries_.back().var;
}

const ag::Var& ParamSet::get(const std::string& name) const
{
    for (const auto& e : entries_)
        if (e.name == name) return e.var;
    throw std::out_of_range("no parameter named " + name);
}

ag::Var& ParamSet::get(const std::string& name)
{
    for (auto& e : entries_)
        if (e.name == name) return e.var;
    throw std::out_of_range("no parameter named " + name);
}

bool ParamSet::contains(const std::string& name) const
{
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

void ParamSet::zero_grad()
{
    for (auto& e : entries_) e.var.zero_grad();
}

std::size_t ParamSet::trainable_count() const
{
    std::size_t n = 0;
    for (const auto& e : entries_)
        if (e.trainable) n += e.var.size();
    return n;
}

Model Model::clone() const
{
    Model m;
    m.dims = dims;
    for (const auto& e : params.entries()) m.params.add(e.name, e.var.value(), e.trainable);
    return m;
}

namespace {

struct Layout {
    std::string name;
    Shape shape;
    bool bias;
};

std::vector<Layout> layout(const ModelDims& d)
{
    const int codes = d.num_codes > 0 ? d.num_codes : kNumExpressionCodes;
    const int df = d.feature_dim;
    std::vector<Layout> l{
        {"enc.conv1.w", {d.conv1_channels, 3, 3, 3}, false},
        {"enc.conv1.b", {d.conv1_channels}, true},
        {"enc.conv2.w", {df, d.conv1_channels, 3, 3}, false},
        {"enc.conv2.b", {df}, true},
        {"enc.fine.w", {d.fine_channels, 3, 1, 1}, false},
        {"enc.fine.b", {d.fine_channels}, true},
        {"enc.query_embed", {codes, df}, false},
        {"enc.seg.w", {d.raw_token_dim, 2 * df}, false},
        {"enc.seg.b", {d.raw_token_dim}, true},
        {"enc.tak.w", {d.raw_token_dim, 2 * df}, false},
        {"enc.tak.b", {d.raw_token_dim}, true},
        {"enc.txt.role", {6, d.role_dim}, false},
        {"enc.txt.h.w", {d.text_hidden, d.raw_token_dim + d.role_dim}, false},
        {"enc.txt.h.b", {d.text_hidden}, true},
        {"enc.txt.out.w", {d.vocab, d.text_hidden}, false},
        {"enc.txt.out.b", {d.vocab}, true},
    };
    int in = d.raw_token_dim;
    for (int i = 0; i < d.proj_layers; ++i) {
        const int out = i + 1 == d.proj_layers ? d.token_dim : d.proj_hidden;
        l.push_back({"proj." + std::to_string(i) + ".w", {out, in}, false});
        l.push_back({"proj." + std::to_string(i) + ".b", {out}, true});
        in = out;
    }
    const int dt = d.token_dim;
    std::vector<Layout> rest{
        {"dec.kernel.w", {df, dt}, false},
        {"dec.kernel.b", {df}, true},
        {"dec.fine.w", {d.fine_channels, dt}, false},
        {"dec.fine.b", {d.fine_channels}, true},
        {"dec.pos.w", {d.pos_channels, dt}, false},
        {"dec.pos.b", {d.pos_channels}, true},
        {"dec.mask_bias", {1}, true},
        {"dec.gate.w", {df, dt}, false},
        {"dec.gate.b", {df}, true},
        {"dec.occ.w", {df}, false},
        {"dec.occ.b", {1}, true},
        {"mem.enc.w", {df, df + 1, 3, 3}, false},
        {"mem.enc.b", {df}, true},
        {"mem.q.w", {d.key_dim, df}, false},
        {"mem.k.w", {d.key_dim, df}, false},
        {"mem.v.w", {df, df}, false},
    };
    l.insert(l.end(), rest.begin(), rest.end());
    return l;
}

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& file)
{
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (in.gcount() != 4) throw CheckpointError("truncated checkpoint " + file.string());
    return v;
}

} // namespace

Model init_model(const ModelDims& dims, std::uint64_t seed, double range)
{
    Model m;
    m.dims = dims;
    if (m.dims.num_codes <= 0) m.dims.num_codes = kNumExpressionCodes;
    Rng rng(seed);
    for (const auto& l : layout(m.dims)) {
        Tensor t(l.shape);
        if (!l.bias) {
            double bound = range;
            if (range <= 0.0) {
                // fan-in scaling keeps activations O(1) through the token chain
                const bool table = l.name == "enc.query_embed" || l.name == "enc.txt.role";
                const std::size_t fan_in =
                    table || l.shape.size() == 1 ? 1 : t.size() / static_cast<std::size_t>(l.shape[0]);
                bound = std::sqrt(3.0 / static_cast<double>(fan_in));
            }
            for (auto& v : t.raw()) v = static_cast<float>(rng.uniform(-bound, bound));
        }
        m.params.add(l.name, std::move(t));
    }
    m.params.add("dec.tau", Tensor::scalar(0.5), false);
    return m;
}

void save_checkpoint(const std::filesystem::path& file, const Model& model)
{
    std::ofstream out(file, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + file.string());
    out.write("TTVRS1", 6);
    for (const auto& e : model.params.entries()) {
        put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        const auto& t = e.var.value();
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.raw()) {
            const float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    if (!out) throw CheckpointError("short write to " + file.string());
}

Model load_checkpoint(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + file.string());
    char magic[6];
    in.read(magic, 6);
    if (in.gcount() != 6 || std::memcmp(magic, "TTVRS1", 6) != 0)
        throw CheckpointError(file.string() + " is not a TTVRS1 checkpoint");
    Model m;
    while (in.peek() != std::char_traits<char>::eof()) {
        const auto len = get_u32(in, file);
        if (len == 0 || len > 256) throw CheckpointError("bad tensor name length in " + file.string());
        std::string name(len, '\0');
        in.read(name.data(), len);
        const auto rank = get_u32(in, file);
        if (rank > 8) throw CheckpointError("bad tensor rank in " + file.string());
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(get_u32(in, file)));
        Tensor t(shape);
        for (auto& v : t.raw()) {
            float f = 0.0f;
            in.read(reinterpret_cast<char*>(&f), 4);
            if (in.gcount() != 4) throw CheckpointError("truncated checkpoint " + file.string());
            v = f;
        }
        m.params.add(name, std::move(t), name != "dec.tau");
    }

    auto dim = [&](const char* name, int i) {
        if (!m.params.contains(name)) throw CheckpointError(std::string("checkpoint lacks ") + name);
        return m.params.get(name).value().dim(i);
    };
    ModelDims& d = m.dims;
    d.conv1_channels = dim("enc.conv1.w", 0);
    d.feature_dim = dim("enc.conv2.w", 0);
    d.fine_channels = dim("enc.fine.w", 0);
    d.num_codes = dim("enc.query_embed", 0);
    d.raw_token_dim = dim("enc.seg.w", 0);
    d.text_hidden = dim("enc.txt.h.w", 0);
    d.role_dim = dim("enc.txt.role", 1);
    d.vocab = dim("enc.txt.out.w", 0);
    d.key_dim = dim("mem.q.w", 0);
    d.pos_channels = dim("dec.pos.w", 0);
    d.proj_layers = 0;
    while (m.params.contains("proj." + std::to_string(d.proj_layers) + ".w")) ++d.proj_layers;
    if (d.proj_layers == 0) throw CheckpointError("checkpoint has no projection layers");
    d.token_dim = dim(("proj." + std::to_string(d.proj_layers - 1) + ".w").c_str(), 0);
    if (d.proj_layers > 1) d.proj_hidden = dim("proj.0.w", 0);

    // Every expected tensor must be present with the expected shape.
    for (const auto& l : layout(d)) {
        if (!m.params.contains(l.name)) throw CheckpointError("checkpoint lacks " + l.name);
        if (m.params.get(l.name).value().shape() != l.shape)
            throw CheckpointError("tensor " + l.name + " has shape " + shape_str(m.params.get(l.name).value().shape()));
    }
    if (!m.params.contains("dec.tau")) throw CheckpointError("checkpoint lacks dec.tau");
    return m;
}

} // namespace ttvrs
