// Copyright 2026 The UMedKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "umed/image_io.h"

#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace umed {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  RawImage raw;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode error in " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (depth == 16) png_set_swap(png);  // little-endian 16-bit samples in memory
  png_read_update_info(png, info);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count =
      static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(count);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] |
                                                  (buffer[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw ConfigError("PNG bit depth must be 8 or 16");
  }
  if (image.channels != 1 && image.channels != 3) {
    throw DimensionError("PNG output supports 1 or 3 channels");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  const int bytes = image.bit_depth / 8;
  const std::size_t rowbytes =
      static_cast<std::size_t>(image.width) * image.channels * bytes;
  std::vector<std::uint8_t> buffer(rowbytes * image.height);
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<std::uint8_t>(image.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(image.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(image.samples[i]);
    }
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode error in " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw IoError("write failed: " + path.string());
}

namespace {

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace

std::vector<std::uint8_t> jpeg_encode(const RawImage& image, int quality) {
  if (quality < 1 || quality > 100) {
    throw ConfigError("JPEG quality must be in [1, 100]");
  }
  if (image.bit_depth != 8) throw ConfigError("JPEG input must be 8-bit");
  if (image.channels != 1 && image.channels != 3) {
    throw DimensionError("JPEG supports 1 or 3 channels");
  }
  std::vector<std::uint8_t> pixels(image.samples.begin(), image.samples.end());
  jpeg_compress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_fail;
  unsigned char* out = nullptr;
  unsigned long out_size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(out);
    throw IoError(std::string("JPEG encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out, &out_size);
  cinfo.image_width = image.width;
  cinfo.image_height = image.height;
  cinfo.input_components = image.channels;
  cinfo.in_color_space = image.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  if (image.channels == 3) {
    // 4:2:0 chroma subsampling.
    cinfo.comp_info[0].h_samp_factor = 2;
    cinfo.comp_info[0].v_samp_factor = 2;
    cinfo.comp_info[1].h_samp_factor = cinfo.comp_info[1].v_samp_factor = 1;
    cinfo.comp_info[2].h_samp_factor = cinfo.comp_info[2].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = pixels.data() + cinfo.next_scanline * stride;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> bytes(out, out + out_size);
  std::free(out);
  return bytes;
}

RawImage jpeg_decode(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_fail;
  RawImage raw;
  std::vector<std::uint8_t> pixels;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), bytes.size());
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  raw.width = cinfo.output_width;
  raw.height = cinfo.output_height;
  raw.channels = cinfo.output_components;
  raw.bit_depth = 8;
  const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels;
  pixels.resize(stride * raw.height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  raw.samples.assign(pixels.begin(), pixels.end());
  return raw;
}

ImagePlane to_image_plane(const RawImage& raw) {
  if (raw.channels != 1 && raw.channels != 3) {
    throw DimensionError("unsupported channel count " +
                         std::to_string(raw.channels));
  }
  RealField f(raw.height, raw.width, raw.channels);
  const float scale = 1.0f / raw.max_value();
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < raw.channels; ++c) {
        f(y, x, c) =
            raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * raw.channels +
                        c] * scale;
      }
    }
  }
  return ImagePlane::from_field(std::move(f));
}

RawImage quantize(const ImagePlane& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw ConfigError("bit depth must be 8 or 16");
  }
  RawImage raw;
  raw.width = image.width();
  raw.height = image.height();
  raw.channels = image.channels();
  raw.bit_depth = bit_depth;
  raw.samples.resize(static_cast<std::size_t>(raw.width) * raw.height * raw.channels);
  const double maxv = raw.max_value();
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < raw.channels; ++c) {
        raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * raw.channels + c] =
            static_cast<std::uint16_t>(std::lround(image(y, x, c) * maxv));
      }
    }
  }
  return raw;
}

BinaryMap to_mask(const RawImage& raw) {
  BinaryMap m(raw.height, raw.width);
  const int maxv = raw.max_value();
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const int v =
          raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * raw.channels];
      m.set(y, x, 2 * v > maxv);
    }
  }
  return m;
}

RawImage mask_to_raw(const BinaryMap& mask) {
  RawImage raw;
  raw.width = mask.width();
  raw.height = mask.height();
  raw.channels = 1;
  raw.bit_depth = 8;
  raw.samples.resize(static_cast<std::size_t>(raw.width) * raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      raw.samples[static_cast<std::size_t>(y) * raw.width + x] = mask(y, x) ? 255 : 0;
    }
  }
  return raw;
}

}  // namespace umed
