// Affine, invertible mapping between field coordinates (meters, origin at the
// field center, +x toward the opponent goal, +y left) and canvas pixels.

export interface FieldDims {
  length: number;
  width: number;
}

export class FieldTransform {
  readonly scale: number;
  readonly offsetX: number;
  readonly offsetY: number;

  constructor(
    readonly dims: FieldDims,
    readonly canvasWidth: number,
    readonly canvasHeight: number,
    readonly marginPx = 24
  ) {
    const sx = (canvasWidth - 2 * marginPx) / dims.length;
    const sy = (canvasHeight - 2 * marginPx) / dims.width;
    this.scale = Math.min(sx, sy);
    this.offsetX = canvasWidth / 2;
    this.offsetY = canvasHeight / 2;
  }

  toScreen(x: number, y: number): [number, number] {
    // +y in the field points left, so the screen y axis is flipped
    return [this.offsetX + x * this.scale, this.offsetY - y * this.scale];
  }

  toField(px: number, py: number): [number, number] {
    return [(px - this.offsetX) / this.scale, (this.offsetY - py) / this.scale];
  }

  metersToPixels(m: number): number {
    return m * this.scale;
  }

  clampToField(x: number, y: number): [number, number] {
    const hx = this.dims.length / 2;
    const hy = this.dims.width / 2;
    return [Math.min(Math.max(x, -hx), hx), Math.min(Math.max(y, -hy), hy)];
  }
}
