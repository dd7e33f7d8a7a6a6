#include "retype/elf_file.hpp"

#include <cstring>
#include <fstream>

#include "retype/error.hpp"

namespace retype {
namespace {

constexpr std::uint32_t kShtSymtab = 2;
constexpr std::uint32_t kShtDynsym = 11;
constexpr std::uint32_t kShtNobits = 8;
constexpr std::uint64_t kShfCompressed = 0x800;

class Reader {
 public:
  Reader(std::span<const std::byte> data, const std::string& name) : data_(data), name_(name) {}

  template <typename T>
  T at(std::uint64_t off) const {
    if (off > data_.size() || data_.size() - off < sizeof(T)) {
      throw Error(ErrorKind::kParse, name_ + ": truncated ELF at offset " + std::to_string(off));
    }
    T v;
    std::memcpy(&v, data_.data() + off, sizeof(T));
    return v;  // host is little-endian; big-endian ELF is rejected up front
  }

 private:
  std::span<const std::byte> data_;
  const std::string& name_;
};

std::string c_string_at(std::span<const std::byte> table, std::uint64_t off) {
  if (off >= table.size()) return {};
  const char* begin = reinterpret_cast<const char*>(table.data()) + off;
  const std::size_t max = table.size() - off;
  return std::string(begin, strnlen(begin, max));
}

}  // namespace

ElfFile ElfFile::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorKind::kIo, "short read from " + path.string());
  return from_bytes(std::move(bytes), path.string());
}

ElfFile ElfFile::from_bytes(std::vector<std::byte> bytes, std::string display_name) {
  ElfFile f;
  f.bytes_ = std::move(bytes);
  f.name_ = std::move(display_name);
  f.parse();
  return f;
}

void ElfFile::parse() {
  if (bytes_.size() < 16 || std::memcmp(bytes_.data(), "\x7f" "ELF", 4) != 0) {
    throw Error(ErrorKind::kParse, name_ + ": not an ELF file");
  }
  const auto cls = static_cast<unsigned>(bytes_[4]);
  const auto data = static_cast<unsigned>(bytes_[5]);
  if (cls != 1 && cls != 2) throw Error(ErrorKind::kParse, name_ + ": bad ELF class");
  if (data != 1) throw Error(ErrorKind::kUnsupported, name_ + ": big-endian ELF is not supported");
  is_64_ = cls == 2;

  Reader r(bytes_, name_);
  machine_ = r.at<std::uint16_t>(18);
  std::uint64_t shoff = 0;
  std::uint16_t shentsize = 0, shnum = 0, shstrndx = 0;
  if (is_64_) {
    shoff = r.at<std::uint64_t>(0x28);
    shentsize = r.at<std::uint16_t>(0x3a);
    shnum = r.at<std::uint16_t>(0x3c);
    shstrndx = r.at<std::uint16_t>(0x3e);
  } else {
    shoff = r.at<std::uint32_t>(0x20);
    shentsize = r.at<std::uint16_t>(0x2e);
    shnum = r.at<std::uint16_t>(0x30);
    shstrndx = r.at<std::uint16_t>(0x32);
  }
  if (shoff == 0 || shnum == 0) return;

  std::vector<std::uint32_t> name_offsets;
  for (std::uint16_t i = 0; i < shnum; ++i) {
    const std::uint64_t base = shoff + std::uint64_t{i} * shentsize;
    ElfSection s;
    name_offsets.push_back(r.at<std::uint32_t>(base));
    s.type = r.at<std::uint32_t>(base + 4);
    if (is_64_) {
      s.flags = r.at<std::uint64_t>(base + 8);
      s.address = r.at<std::uint64_t>(base + 16);
      s.offset = r.at<std::uint64_t>(base + 24);
      s.size = r.at<std::uint64_t>(base + 32);
    } else {
      s.flags = r.at<std::uint32_t>(base + 8);
      s.address = r.at<std::uint32_t>(base + 12);
      s.offset = r.at<std::uint32_t>(base + 16);
      s.size = r.at<std::uint32_t>(base + 20);
    }
    if (s.type != kShtNobits && (s.offset > bytes_.size() || bytes_.size() - s.offset < s.size)) {
      throw Error(ErrorKind::kParse, name_ + ": section " + std::to_string(i) +
                                         " extends past end of file");
    }
    sections_.push_back(s);
  }
  if (shstrndx < sections_.size()) {
    const auto& strtab = sections_[shstrndx];
    auto table = std::span<const std::byte>(bytes_).subspan(strtab.offset, strtab.size);
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      sections_[i].name = c_string_at(table, name_offsets[i]);
    }
  }
}

const ElfSection* ElfFile::find_section(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<std::span<const std::byte>> ElfFile::section_data(std::string_view name) const {
  const ElfSection* s = find_section(name);
  if (!s) return std::nullopt;
  if (s->type == kShtNobits) return std::span<const std::byte>{};
  if (s->flags & kShfCompressed) {
    throw Error(ErrorKind::kUnsupported,
                name_ + ": compressed section " + std::string(name) + " is not supported");
  }
  return std::span<const std::byte>(bytes_).subspan(s->offset, s->size);
}

std::vector<ElfSymbol> ElfFile::symbols() const {
  const ElfSection* symtab = nullptr;
  std::size_t symtab_index = 0;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (sections_[i].type == kShtSymtab) {
      symtab = &sections_[i];
      symtab_index = i;
      break;
    }
  }
  if (!symtab) {
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      if (sections_[i].type == kShtDynsym) {
        symtab = &sections_[i];
        symtab_index = i;
        break;
      }
    }
  }
  std::vector<ElfSymbol> out;
  if (!symtab) return out;
  Reader r(bytes_, name_);
  // sh_link of a symbol table names its string table.
  const std::uint64_t shoff = is_64_ ? r.at<std::uint64_t>(0x28) : r.at<std::uint32_t>(0x20);
  const std::uint16_t shentsize = r.at<std::uint16_t>(is_64_ ? 0x3a : 0x2e);
  const std::uint32_t link =
      r.at<std::uint32_t>(shoff + std::uint64_t{shentsize} * symtab_index + (is_64_ ? 40 : 24));
  if (link >= sections_.size()) return out;
  const auto& strsec = sections_[link];
  auto strtab = std::span<const std::byte>(bytes_).subspan(strsec.offset, strsec.size);

  const std::uint64_t entsize = is_64_ ? 24 : 16;
  for (std::uint64_t off = symtab->offset; off + entsize <= symtab->offset + symtab->size;
       off += entsize) {
    ElfSymbol sym;
    std::uint32_t name_off = r.at<std::uint32_t>(off);
    std::uint8_t info = 0;
    if (is_64_) {
      info = r.at<std::uint8_t>(off + 4);
      sym.section_index = r.at<std::uint16_t>(off + 6);
      sym.value = r.at<std::uint64_t>(off + 8);
      sym.size = r.at<std::uint64_t>(off + 16);
    } else {
      sym.value = r.at<std::uint32_t>(off + 4);
      sym.size = r.at<std::uint32_t>(off + 8);
      info = r.at<std::uint8_t>(off + 12);
      sym.section_index = r.at<std::uint16_t>(off + 14);
    }
    sym.type = info & 0xf;
    sym.binding = info >> 4;
    sym.name = c_string_at(strtab, name_off);
    out.push_back(std::move(sym));
  }
  return out;
}

}  // namespace retype
