#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "fluidlevel/errors.hpp"
#include "fluidlevel/ingest.hpp"
#include "fluidlevel/kernels.hpp"

namespace fluidlevel::ingest {

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, mgr->message);
  std::longjmp(mgr->jump, 1);
}

void jpeg_silence(j_common_ptr cinfo, int msg_level) {
  if (msg_level < 0) ++cinfo->err->num_warnings;
}

Frame decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = [](j_common_ptr) {};
  err.pub.emit_message = jpeg_silence;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    raise(Errc::corrupt_image, std::string("jpeg: ") + err.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), bytes.size());
  jpeg_read_header(&cinfo, TRUE);

  const bool gray_source = cinfo.num_components == 1;
  cinfo.out_color_space = gray_source ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  Frame frame;
  frame.width = static_cast<int>(cinfo.output_width);
  frame.height = static_cast<int>(cinfo.output_height);
  frame.pixels.resize(static_cast<std::size_t>(frame.width) * frame.height);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.width) *
                                cinfo.output_components);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    std::uint8_t* dst =
        frame.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline - 1) * frame.width;
    if (gray_source) {
      std::memcpy(dst, row.data(), static_cast<std::size_t>(frame.width));
    } else {
      kernels::luma_bt601(row.data(), static_cast<std::size_t>(frame.width), dst);
    }
  }
  jpeg_finish_decompress(&cinfo);
  const long warnings = cinfo.err->num_warnings;
  jpeg_destroy_decompress(&cinfo);
  // Truncated or corrupt scan data surfaces as warnings with a filled-in
  // image; reject rather than return invented pixels.
  if (warnings > 0) raise(Errc::corrupt_image, "jpeg: corrupt or truncated scan data");
  return frame;
}

Frame decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    raise(Errc::corrupt_image, std::string("png: ") + image.message);

  const bool gray_source = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray_source ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  Frame frame;
  frame.width = static_cast<int>(image.width);
  frame.height = static_cast<int>(image.height);

  const std::size_t pixel_count = static_cast<std::size_t>(frame.width) * frame.height;
  std::vector<std::uint8_t> buffer(pixel_count * (gray_source ? 1 : 3));
  const png_color background{0, 0, 0};
  if (!png_image_finish_read(&image, &background, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    raise(Errc::corrupt_image, "png: " + message);
  }

  frame.pixels.resize(pixel_count);
  if (gray_source) {
    frame.pixels = std::move(buffer);
  } else {
    kernels::luma_bt601(buffer.data(), pixel_count, frame.pixels.data());
  }
  return frame;
}

}  // namespace

Frame decode_image(std::span<const std::uint8_t> bytes, ImageFormat hint) {
  ImageFormat format = hint;
  if (format == ImageFormat::autodetect) {
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) format = ImageFormat::jpeg;
    else if (bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
             bytes[3] == 'G')
      format = ImageFormat::png;
    else if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') format = ImageFormat::pgm;
    else raise(Errc::unsupported_format, "decode_image: unrecognized image format");
  }
  switch (format) {
    case ImageFormat::jpeg: return decode_jpeg(bytes);
    case ImageFormat::png: return decode_png(bytes);
    case ImageFormat::pgm: return read_pgm(bytes);
    case ImageFormat::autodetect: break;
  }
  raise(Errc::unsupported_format, "decode_image: unsupported format hint");
}

}  // namespace fluidlevel::ingest
