/** Detail pane: full-resolution image, metadata editing, and the share dialog.
 *
 * Metadata edits round-trip through the PATCH endpoint optimistically: the
 * form keeps showing the attempted values while saving, and rolls back to the
 * last server-confirmed record if the API rejects them. The share dialog
 * pre-fills the default crop (the bounding box of the largest changed region)
 * and offers a whole-board option.
 */

import { ApiClient, ApiError, CaptureRecord } from './api.js';

export interface DetailCallbacks {
  onClose(): void;
  onRecordChanged(record: CaptureRecord): void;
}

function field(labelText: string, input: HTMLElement): HTMLElement {
  const wrap = document.createElement('label');
  wrap.className = 'field';
  const span = document.createElement('span');
  span.textContent = labelText;
  wrap.append(span, input);
  return wrap;
}

export function renderDetail(
  record: CaptureRecord,
  users: { id: string; display_name: string }[],
  api: ApiClient,
  isOwner: boolean,
  callbacks: DetailCallbacks,
): HTMLElement {
  const root = document.createElement('div');
  root.className = 'detail';
  root.dataset.recordId = record.id;

  let confirmed = { ...record };

  const close = document.createElement('button');
  close.className = 'close-detail';
  close.textContent = 'close';
  close.addEventListener('click', () => callbacks.onClose());
  root.appendChild(close);

  const img = document.createElement('img');
  img.className = 'detail-image';
  img.src = api.imageUrl(record.id);
  root.appendChild(img);

  const status = document.createElement('p');
  status.className = 'status';
  root.appendChild(status);

  // -- metadata form --------------------------------------------------------
  const form = document.createElement('div');
  form.className = 'metadata-form';

  const label = document.createElement('input');
  label.className = 'meta-label';
  label.value = record.label;
  form.appendChild(field('label', label));

  const description = document.createElement('textarea');
  description.className = 'meta-description';
  description.value = record.description;
  form.appendChild(field('description', description));

  const tags = document.createElement('input');
  tags.className = 'meta-tags';
  tags.value = record.tags.join(', ');
  form.appendChild(field('tags (comma separated)', tags));

  const contributors = document.createElement('select');
  contributors.className = 'meta-contributors';
  contributors.multiple = true;
  for (const user of users) {
    const option = document.createElement('option');
    option.value = user.id;
    option.textContent = user.display_name;
    option.selected = record.contributors.includes(user.id);
    contributors.appendChild(option);
  }
  form.appendChild(field('contributors', contributors));

  const bookmark = document.createElement('input');
  bookmark.type = 'checkbox';
  bookmark.className = 'meta-bookmark';
  bookmark.checked = record.bookmarked;
  form.appendChild(field('bookmarked', bookmark));

  const applyRecord = (rec: CaptureRecord) => {
    label.value = rec.label;
    description.value = rec.description;
    tags.value = rec.tags.join(', ');
    for (const option of Array.from(contributors.options)) {
      option.selected = rec.contributors.includes(option.value);
    }
    bookmark.checked = rec.bookmarked;
  };

  const save = document.createElement('button');
  save.className = 'save-metadata';
  save.textContent = 'save metadata';
  save.addEventListener('click', async () => {
    const patch = {
      label: label.value,
      description: description.value,
      tags: tags.value
        .split(',')
        .map((t) => t.trim())
        .filter(Boolean),
      contributors: Array.from(contributors.selectedOptions).map((o) => o.value),
      bookmarked: bookmark.checked,
    };
    try {
      const updated = await api.setMetadata(record.id, patch);
      confirmed = { ...updated };
      status.textContent = 'saved';
      callbacks.onRecordChanged(updated);
    } catch (err) {
      // roll back to the last state the server confirmed
      applyRecord(confirmed);
      status.textContent = `save failed: ${err instanceof ApiError ? err.message : err}`;
    }
  });
  form.appendChild(save);
  root.appendChild(form);

  // -- share dialog ----------------------------------------------------------
  if (isOwner) {
    const shareBox = document.createElement('div');
    shareBox.className = 'share-dialog';
    const title = document.createElement('h4');
    title.textContent = 'share';
    shareBox.appendChild(title);

    const targets = document.createElement('select');
    targets.className = 'share-targets';
    targets.multiple = true;
    for (const user of users) {
      if (user.id === record.owner_id) continue;
      const option = document.createElement('option');
      option.value = user.id;
      option.textContent = user.display_name;
      targets.appendChild(option);
    }
    shareBox.appendChild(field('share with', targets));

    const regionInput = document.createElement('input');
    regionInput.className = 'share-region';
    regionInput.placeholder = 'x, y, w, h';
    shareBox.appendChild(field('region (image pixels)', regionInput));

    // pre-fill with the bounding rectangle of the largest detected change
    void api
      .defaultShareRegion(record.id)
      .then(({ region }) => {
        if (!regionInput.value) regionInput.value = region.join(', ');
      })
      .catch(() => {
        // no changed cells: leave empty, user may share the whole board
      });

    const wholeBoard = document.createElement('button');
    wholeBoard.className = 'share-whole-board';
    wholeBoard.textContent = 'entire whiteboard';
    wholeBoard.addEventListener('click', () => {
      regionInput.value = [0, 0, record.image_w, record.image_h].join(', ');
    });
    shareBox.appendChild(wholeBoard);

    const shareButton = document.createElement('button');
    shareButton.className = 'do-share';
    shareButton.textContent = 'share';
    shareButton.addEventListener('click', async () => {
      const chosen = Array.from(targets.selectedOptions).map((o) => o.value);
      const region = regionInput.value
        ? regionInput.value.split(',').map((v) => Math.round(Number(v.trim())))
        : null;
      try {
        const updated = await api.share(record.id, chosen, region);
        confirmed = { ...updated };
        status.textContent = `shared with ${updated.shared_with.join(', ')}`;
        callbacks.onRecordChanged(updated);
      } catch (err) {
        status.textContent = `share failed: ${err instanceof ApiError ? err.message : err}`;
      }
    });
    shareBox.appendChild(shareButton);
    root.appendChild(shareBox);
  }

  return root;
}
